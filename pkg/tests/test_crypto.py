"""Timed commitments, vector commitments, RS codes, PoR and the outcome relation."""

import itertools
import random
from dataclasses import replace
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sealedbid.crypto import nitc
from sealedbid.crypto.aok import TransparentAoK
from sealedbid.crypto.encoding import pack, unpack
from sealedbid.crypto.merkle import IndexOutOfRange, vc_digest, vc_gen, vc_open, vc_vf
from sealedbid.crypto.por import ChallengeTooLarge, por_challenge, por_respond, por_verify
from sealedbid.crypto.relation import (
    BULLETS,
    Context,
    Witness,
    WitnessEntry,
    check_relation,
    commitment_symbols,
    decode_bid_message,
    encode_bid_message,
    encode_out,
    statement_for,
    tuple_bytes,
)
from sealedbid.crypto.rs import (
    P,
    InsufficientSymbols,
    codeword_length,
    guaranteed_threshold,
    rs_encode,
    rs_recons,
)
from sealedbid.domain import ValueDomain
from sealedbid.mechanism import SecondPriceAuction
from sealedbid.outcome import SELLER, xor_coin

CRS = nitc.cached_gen(512, 1 << 8, 7)
VC = vc_gen()


# -- NITC ------------------------------------------------------------------------


def test_gen_h_matches_squaring_oracle():
    crs = nitc.cached_gen(512, 1 << 10, 3)
    assert crs.N.bit_length() >= 511
    assert crs.h == pow(crs.g, 2 ** (1 << 10), crs.N)


def test_gen_one_squaring():
    crs = nitc.gen(512, 1, random.Random(5))
    assert crs.h == pow(crs.g, 2, crs.N)
    assert 1 < crs.g < crs.N


def test_gen_rejects_zero_difficulty():
    with pytest.raises(ValueError):
        nitc.gen(512, 0, random.Random(1))


def test_commit_open_roundtrip():
    rng = random.Random(11)
    cm, pi, opening = nitc.com(CRS, b"bid 1/2", rng)
    assert nitc.com_vf(CRS, cm, pi)
    assert nitc.dec_vf(CRS, cm, b"bid 1/2", opening)
    assert not nitc.dec_vf(CRS, cm, b"bid 1/3", opening)
    assert not nitc.dec_vf(CRS, cm, b"bid 1/2", replace(opening, s=opening.s + 1))


def test_commitments_are_randomised():
    rng = random.Random(12)
    seen = {nitc.com(CRS, b"same", rng)[0] for _ in range(100)}
    assert len(seen) == 100


def test_forced_opening_matches():
    rng = random.Random(13)
    cm, pi, _ = nitc.com(CRS, b"forced", rng)
    forced = nitc.fdec(CRS, cm, pi)
    assert forced.message == b"forced" and forced.consistent
    assert forced.w == pow(cm.u, 2 ** CRS.T, CRS.N)
    assert nitc.fdec_vf(CRS, cm, b"forced", forced)
    assert not nitc.fdec_vf(CRS, cm, b"forcex", forced)
    assert not nitc.fdec_vf(CRS, cm, b"forced", replace(forced, pi=forced.pi + 1))


def test_flipped_ciphertext_is_flagged():
    rng = random.Random(14)
    cm, pi, _ = nitc.com(CRS, b"tamper", rng)
    bad = replace(cm, ct=bytes([cm.ct[0] ^ 1]) + cm.ct[1:])
    forced = nitc.fdec(CRS, bad, nitc.pi_com(CRS, bad))
    assert not forced.consistent
    assert forced.message != b"tamper"


def test_com_vf_rejects_malformed():
    rng = random.Random(15)
    cm, pi, _ = nitc.com(CRS, b"x", rng)
    for u in (0, 1, CRS.N, CRS.N + 5):
        bad = replace(cm, u=u)
        assert not nitc.com_vf(CRS, bad, nitc.pi_com(CRS, bad))
        with pytest.raises(nitc.MalformedCommitment):
            nitc.fdec(CRS, bad, nitc.pi_com(CRS, bad))
    assert not nitc.com_vf(CRS, replace(cm, tag=b"short"), pi)


@pytest.mark.parametrize("T", [8, 16, 64])
def test_poe_against_brute_force(T):
    crs = nitc.cached_gen(512, T, 2)
    u = pow(crs.g, 12345, crs.N)
    w = nitc.square_chain(u, T, crs.N)
    assert w == pow(u, 2 ** T, crs.N)
    pi = nitc.poe_prove(crs, u, w)
    ell = nitc.poe_challenge(crs, u, w)
    assert pow(pi, ell, crs.N) * pow(u, 2 ** T % ell, crs.N) % crs.N == w
    assert nitc.poe_verify(crs, u, w, pi)
    assert not nitc.poe_verify(crs, u, w * u % crs.N, pi)


@settings(max_examples=25, deadline=None)
@given(st.binary(max_size=64))
def test_nitc_property(message):
    rng = random.Random(message)
    cm, pi, opening = nitc.com(CRS, message, rng)
    assert nitc.dec_vf(CRS, cm, message, opening)
    forced = nitc.fdec(CRS, cm, pi)
    assert forced.message == message
    assert nitc.fdec_vf(CRS, cm, message, forced)


# -- vector commitment ----------------------------------------------------------------


def test_vc_open_and_tamper():
    vec = [b"a", b"b", b"c", b"d"]
    digest, aux = vc_digest(VC, vec)
    proof = vc_open(VC, aux, [1, 3], 4)
    assert vc_vf(VC, 4, digest, [1, 3], {1: b"b", 3: b"d"}, proof)
    assert not vc_vf(VC, 4, digest, [1, 3], {1: b"b", 3: b"x"}, proof)
    assert not vc_vf(VC, 5, digest, [1, 3], {1: b"b", 3: b"d"}, proof)


def test_vc_empty_query():
    digest, aux = vc_digest(VC, [b"a", b"b", b"c"])
    assert vc_vf(VC, 3, digest, [], {}, vc_open(VC, aux, [], 3))


def test_vc_out_of_range():
    _, aux = vc_digest(VC, [b"a", b"b"])
    with pytest.raises(IndexOutOfRange):
        vc_open(VC, aux, [2], 2)


def test_vc_duplicates_and_positions():
    """Equal payloads are fine, but an opening at one position does not
    verify at the other."""
    digest, aux = vc_digest(VC, [b"z", b"z", b"z"])
    proof = vc_open(VC, aux, [0], 3)
    assert vc_vf(VC, 3, digest, [0], {0: b"z"}, proof)
    moved = type(proof)(3, {2: proof.paths[0]})
    assert not vc_vf(VC, 3, digest, [2], {2: b"z"}, moved)


@settings(max_examples=50)
@given(st.lists(st.binary(max_size=8), min_size=1, max_size=17), st.data())
def test_vc_property(vec, data):
    digest, aux = vc_digest(VC, vec)
    q = data.draw(st.lists(st.integers(0, len(vec) - 1), unique=True))
    proof = vc_open(VC, aux, q, len(vec))
    assert vc_vf(VC, len(vec), digest, q, {i: vec[i] for i in q}, proof)
    if q:
        i = q[0]
        assert not vc_vf(VC, len(vec), digest, q, {**{j: vec[j] for j in q}, i: vec[i] + b"!"}, proof)


# -- Reed-Solomon ---------------------------------------------------------------


def lagrange_eval(points, x):
    """Pure-Python interpolation oracle over GF(P)."""
    total = 0
    for i, (xi, yi) in enumerate(points):
        num, den = 1, 1
        for j, (xj, _) in enumerate(points):
            if i != j:
                num = num * (x - xj) % P
                den = den * (xi - xj) % P
        total = (total + yi * num * pow(den, P - 2, P)) % P
    return total


def test_rs_example():
    cw = rs_encode([1, 2, 3, 4])
    assert len(cw) == 6
    assert cw.symbols[:4] == (1, 2, 3, 4)
    # a cubic through (0,1),(1,2),(2,3),(3,4) is the line x+1
    assert cw.symbols[4:] == (5, 6)
    partial = {i: s for i, s in enumerate(cw.symbols) if i not in (0, 5)}
    assert rs_recons(partial, 4) == [1, 2, 3, 4]
    with pytest.raises(InsufficientSymbols):
        rs_recons({1: 2, 2: 3, 4: 5}, 4)


def test_rs_matches_oracle():
    rng = random.Random(21)
    for L in (1, 2, 5, 13, 40):
        msg = [rng.randrange(P) for _ in range(L)]
        cw = rs_encode(msg)
        assert len(cw) == codeword_length(L)
        pts = list(enumerate(msg))
        for x in range(L, len(cw)):
            assert cw.symbols[x] == lagrange_eval(pts, x)


def test_rs_rejects_bad_symbols():
    with pytest.raises(ValueError):
        rs_encode([])
    with pytest.raises(ValueError):
        rs_encode([P])


@pytest.mark.parametrize("L", [1, 2, 3, 4])
def test_rs_every_threshold_subset(L):
    rng = random.Random(L)
    msg = [rng.randrange(P) for _ in range(L)]
    cw = rs_encode(msg)
    n = len(cw)
    for size in range(guaranteed_threshold(n), n + 1):
        for keep in itertools.combinations(range(n), size):
            assert rs_recons({i: cw.symbols[i] for i in keep}, L) == msg


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, P - 1), min_size=1, max_size=64), st.randoms(use_true_random=False))
def test_rs_roundtrip_property(msg, rnd):
    cw = rs_encode(msg)
    n = len(cw)
    keep = rnd.sample(range(n), rnd.randint(guaranteed_threshold(n), n))
    assert rs_recons({i: cw.symbols[i] for i in keep}, len(msg)) == msg


# -- proof of retrievability -------------------------------------------------------


def committed_code(L=30, seed=0):
    rng = random.Random(seed)
    cw = rs_encode([rng.randrange(P) for _ in range(L)])
    from sealedbid.crypto.relation import leaf_vector

    digest, aux = vc_digest(VC, leaf_vector(cw.symbols))
    return cw, digest, aux


def test_por_honest():
    cw, digest, aux = committed_code()
    q = por_challenge(random.Random(1), 10, len(cw))
    assert len(set(q)) == 10
    answers, proof = por_respond(VC, aux, cw.symbols, q)
    assert por_verify(VC, digest, len(cw), q, answers, proof)


def test_por_tampered_symbol():
    cw, digest, aux = committed_code()
    q = por_challenge(random.Random(2), 10, len(cw))
    bad = list(cw.symbols)
    bad[q[0]] = (bad[q[0]] + 1) % P
    answers, proof = por_respond(VC, aux, bad, q)
    assert not por_verify(VC, digest, len(cw), q, answers, proof)


def test_por_unchallenged_tamper_slips_through():
    cw, digest, aux = committed_code()
    bad = list(cw.symbols)
    bad[0] = (bad[0] + 1) % P
    q = [1, 2, 3]
    answers, proof = por_respond(VC, aux, bad, q)
    assert por_verify(VC, digest, len(cw), q, answers, proof)


def test_por_challenge_too_large():
    with pytest.raises(ChallengeTooLarge):
        por_challenge(random.Random(0), 7, 6)


# -- encoding, messages and the relation ---------------------------------------------


@given(st.lists(st.binary(max_size=40), max_size=6))
def test_pack_roundtrip(fields):
    assert unpack(pack(*fields)) == fields


TENTHS = ValueDomain.grid(11)
CTX = Context(CRS, VC, 8, TENTHS)


def test_bid_message_codec():
    r = bytes(range(8))
    msg = encode_bid_message(3, F(1, 2), r, 8)
    assert len(msg) == CTX.message_len
    assert decode_bid_message(CTX, 3, msg) == (F(1, 2), r, True)
    assert decode_bid_message(CTX, 4, msg)[2] is False
    seller = encode_bid_message(SELLER, None, r, 8)
    assert decode_bid_message(CTX, SELLER, seller) == (None, r, True)
    off_grid = encode_bid_message(3, F(1, 3), r, 8)
    assert decode_bid_message(CTX, 3, off_grid) == (None, bytes(8), False)
    assert decode_bid_message(CTX, 3, b"junk")[2] is False


def honest_witness(values, seed=0, forced=()):
    """Everything an honest platform would hold after step (g)."""
    rng = random.Random(seed)
    rules = SecondPriceAuction(TENTHS, F(1, 5), 1)
    ids = [SELLER] + sorted(values)
    parts = {}
    for i in ids:
        r = rng.randbytes(8)
        v = None if i == SELLER else F(values[i])
        msg = encode_bid_message(i, v, r, 8)
        cm, pi, opening = nitc.com(CRS, msg, rng)
        proof = nitc.fdec(CRS, cm, pi) if i in forced else opening
        parts[i] = (cm, pi, proof, msg, v, r)
    r_p = rng.randbytes(8)
    coin = xor_coin([parts[i][5] for i in ids] + [r_p])
    out = rules.outcome({i: parts[i][4] for i in ids if i != SELLER}, coin)
    entries = {i: WitnessEntry(*parts[i], encode_out(out, i)) for i in ids}
    tuples = [tuple_bytes(CTX, i, entries[i].cm, entries[i].pi_com) for i in ids]
    code = rs_encode(commitment_symbols(CTX, tuples)).symbols
    w = Witness(code, tuple(ids), entries)
    return statement_for(CTX, w, r_p), w, rules


def test_relation_accepts_honest():
    st_, w, rules = honest_witness({1: "0.5", 2: "0.3"})
    assert check_relation(CTX, st_, w, rules).ok


def test_relation_accepts_forced_openings():
    st_, w, rules = honest_witness({1: "0.5", 2: "0.3"}, forced={2})
    assert check_relation(CTX, st_, w, rules).ok


def test_relation_duplicate_identity():
    st_, w, rules = honest_witness({1: "0.5", 2: "0.3"})
    dup = replace(w, identities=w.identities + (1,))
    res = check_relation(CTX, replace(st_, n=st_.n + 1), dup, rules)
    assert res.failed == BULLETS[0]


def test_relation_mutated_outcome():
    st_, w, rules = honest_witness({1: "0.5", 2: "0.3"})
    entries = dict(w.entries)
    loser = entries[2]
    entries[2] = replace(loser, out=encode_out(rules.outcome({1: F(1, 2), 2: F(3, 10)}, bytes(8)), 1))
    bad = replace(w, entries=entries)
    # recommit so only the final check can catch it
    res = check_relation(CTX, statement_for(CTX, bad, st_.r_platform), bad, rules)
    assert res.failed == BULLETS[6]


def test_relation_wrong_digest():
    st_, w, rules = honest_witness({1: "0.5"})
    assert check_relation(CTX, replace(st_, digest=bytes(32)), w, rules).failed == BULLETS[2]
    assert check_relation(CTX, replace(st_, digest2=bytes(32)), w, rules).failed == BULLETS[3]


def test_relation_bad_code():
    st_, w, rules = honest_witness({1: "0.5"})
    code = list(w.code)
    code[-1] = (code[-1] + 1) % P
    assert check_relation(CTX, st_, replace(w, code=tuple(code)), rules).failed == BULLETS[1]


def test_relation_lying_value():
    st_, w, rules = honest_witness({1: "0.5", 2: "0.3"})
    entries = dict(w.entries)
    entries[2] = replace(entries[2], value=F(9, 10))
    assert check_relation(CTX, st_, replace(w, entries=entries), rules).failed == BULLETS[5]


def test_transparent_aok():
    st_, w, rules = honest_witness({1: "0.5", 2: "0.3"})
    aok = TransparentAoK(CTX, rules)
    crs = aok.gen()
    proof = aok.prove(crs, st_, w)
    assert aok.verify(crs, st_, proof)
    entries = dict(w.entries)
    entries[1] = replace(entries[1], value=F(2, 5))
    assert not aok.verify(crs, st_, replace(w, entries=entries))
    assert not aok.verify(crs, replace(st_, n=5), proof)
    assert not aok.verify(crs, st_, "not a witness")
