"""Wire formats for the compiled auction and the NP relation over them.

A statement ``(digest, digest2, n, r_P)`` holds iff a witness
``(code, I, {c_j, pi_com_j, pi*_j, v_j, r_j, out_j})`` satisfies every
check in :func:`check_relation`, in order.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from ..domain import ValueDomain
from ..outcome import SELLER, AuctionOutcome, xor_coin
from . import nitc
from .encoding import int_bytes, pack, unpack
from .merkle import VcCrs, vc_digest
from .rs import bytes_to_symbols, codeword_length, rs_encode, symbol_bytes

BULLETS = (
    "identities distinct and |I| = n",
    "code = RS.Encode(c)",
    "digest = VC.Digest(code)",
    "digest' = VC.Digest({i, c_i, pi_com_i, out_i})",
    "ComVf for every tuple",
    "DecVf or FDecVf for every i||v_i||r_i",
    "outcomes equal the rules on (v, r)",
)


@dataclass(frozen=True)
class Context:
    """Public parameters every verifier shares."""

    nitc: nitc.NitcCrs
    vc: VcCrs
    coin_bytes: int
    domain: ValueDomain

    @property
    def message_len(self) -> int:
        return 8 + 1 + 8 + 8 + self.coin_bytes


# -- messages -------------------------------------------------------------------


def encode_bid_message(ident: int, value: Optional[Fraction], r: bytes, coin_bytes: int) -> bytes:
    """Fixed-width ``i || v || r``; ``v = None`` encodes the seller's ⊥."""
    if len(r) != coin_bytes:
        raise ValueError("coin has the wrong length")
    if value is None:
        body = b"\x00" + bytes(16)
    else:
        body = b"\x01" + int_bytes(value.numerator, 8) + int_bytes(value.denominator, 8)
    return int_bytes(ident, 8) + body + bytes(r)


def decode_bid_message(ctx: Context, ident: int, message: bytes) -> tuple[Optional[Fraction], bytes, bool]:
    """Total decoder: ``(value, r, well_formed)``.

    Anything malformed (wrong identity, non-tick value, a value in the
    seller's slot) decodes to no bid with an all-zero coin, so a garbage
    forced opening can never stall the protocol.
    """
    zero = bytes(ctx.coin_bytes)
    if len(message) != ctx.message_len:
        return None, zero, False
    if int.from_bytes(message[:8], "big") != ident:
        return None, zero, False
    flag = message[8]
    r = message[25:]
    if flag == 0 and message[9:25] == bytes(16):
        return None, r, ident == SELLER
    if flag != 1 or ident == SELLER:
        return None, zero, False
    num = int.from_bytes(message[9:17], "big")
    den = int.from_bytes(message[17:25], "big")
    if den == 0:
        return None, zero, False
    value = Fraction(num, den)
    if value not in ctx.domain:
        return None, zero, False
    return value, r, True


def tuple_bytes(ctx: Context, ident: int, cm: nitc.TimedCommitment, pi_com: bytes) -> bytes:
    return pack(int_bytes(ident, 8), cm.to_bytes(ctx.nitc.width), pi_com)


def tuple_ok(ctx: Context, cm, pi_com: bytes) -> bool:
    """ComVf plus the fixed ciphertext width every honest commitment has."""
    return nitc.com_vf(ctx.nitc, cm, pi_com) and len(cm.ct) == ctx.message_len


def encode_out(outcome: AuctionOutcome, ident: int) -> bytes:
    a, b = outcome.private(ident)
    b = Fraction(b)
    role = b"seller" if ident == SELLER else b"buyer"
    return pack(role, int_bytes(int(a), 8), f"{b.numerator}/{b.denominator}".encode())


def decode_out(blob: bytes) -> tuple[int, Fraction]:
    _, a, b = unpack(blob)
    return int.from_bytes(a, "big"), Fraction(b.decode())


def commitment_symbols(ctx: Context, tuples: Sequence[bytes]) -> list[int]:
    return bytes_to_symbols(pack(*tuples))


def expected_codeword_length(ctx: Context, n: int) -> int:
    """Codeword length for ``n`` well-formed tuples.

    Every honest tuple has the same width, so players can size their
    retrievability challenges from ``n`` alone.
    """
    dummy = nitc.TimedCommitment(2, bytes(ctx.message_len), bytes(32))
    one = len(tuple_bytes(ctx, 0, dummy, nitc.pi_com(ctx.nitc, dummy)))
    payload = 4 + n * (4 + one)
    return codeword_length((payload + 1) // 2)


def leaf_vector(code_symbols: Sequence[int]) -> list[bytes]:
    return [symbol_bytes(s) for s in code_symbols]


def outcome_vector(tuples: Sequence[bytes], outs: Sequence[bytes]) -> list[bytes]:
    return [pack(t, o) for t, o in zip(tuples, outs)]


# -- statement / witness ---------------------------------------------------------


@dataclass(frozen=True)
class Statement:
    digest: bytes
    digest2: bytes
    n: int
    r_platform: bytes


@dataclass(frozen=True)
class WitnessEntry:
    cm: nitc.TimedCommitment
    pi_com: bytes
    pi_star: object  # nitc.Opening or nitc.ForcedOpening
    message: bytes
    value: Optional[Fraction]
    r: bytes
    out: bytes


@dataclass(frozen=True)
class Witness:
    code: tuple[int, ...]
    identities: tuple[int, ...]
    entries: Mapping[int, WitnessEntry]


@dataclass
class RelationResult:
    ok: bool
    failed: Optional[str] = None

    def __bool__(self):
        return self.ok


def check_relation(ctx: Context, statement: Statement, witness: Witness, rules) -> RelationResult:
    def fail(k):
        return RelationResult(False, BULLETS[k])

    ids = list(witness.identities)
    if len(set(ids)) != len(ids) or len(ids) != statement.n or set(ids) != set(witness.entries):
        return fail(0)
    entries = [witness.entries[j] for j in ids]
    tuples = [tuple_bytes(ctx, j, e.cm, e.pi_com) for j, e in zip(ids, entries)]
    try:
        code = rs_encode(commitment_symbols(ctx, tuples)).symbols
    except ValueError:
        return fail(1)
    if tuple(witness.code) != code:
        return fail(1)
    if vc_digest(ctx.vc, leaf_vector(code))[0] != statement.digest:
        return fail(2)
    outs = [e.out for e in entries]
    if vc_digest(ctx.vc, outcome_vector(tuples, outs))[0] != statement.digest2:
        return fail(3)
    if not all(tuple_ok(ctx, e.cm, e.pi_com) for e in entries):
        return fail(4)
    for j, e in zip(ids, entries):
        value, r, _ = decode_bid_message(ctx, j, e.message)
        if (value, r) != (e.value, e.r):
            return fail(5)
        if not nitc.verify_opening(ctx.nitc, e.cm, e.message, e.pi_star):
            return fail(5)
    coin = xor_coin([e.r for e in entries] + [statement.r_platform])
    bids = {j: e.value for j, e in zip(ids, entries) if j != SELLER and e.value is not None}
    outcome = rules.outcome(bids, coin)
    for j, e in zip(ids, entries):
        if encode_out(outcome, j) != e.out:
            return fail(6)
    return RelationResult(True)


def statement_for(ctx: Context, witness: Witness, r_platform: bytes) -> Statement:
    """Honest statement for a witness (used by provers and tests)."""
    ids = list(witness.identities)
    entries = [witness.entries[j] for j in ids]
    tuples = [tuple_bytes(ctx, j, e.cm, e.pi_com) for j, e in zip(ids, entries)]
    digest = vc_digest(ctx.vc, leaf_vector(witness.code))[0]
    digest2 = vc_digest(ctx.vc, outcome_vector(tuples, [e.out for e in entries]))[0]
    return Statement(digest, digest2, len(ids), r_platform)
