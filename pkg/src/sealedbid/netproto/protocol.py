"""The compiled auction as a round-based simulation.

Buyers and the seller talk to the platform over private channels and read
a shared blockchain. Each step of the box (a)-(j) is one block of
:func:`run_protocol`; an :class:`Adversary` can override the behaviour of
the players it corrupts and nothing else.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from ..crypto import nitc
from ..crypto.aok import TransparentAoK
from ..crypto.merkle import IndexOutOfRange, MerkleProof, vc_digest, vc_open, vc_vf
from ..crypto.por import por_challenge, por_respond, por_verify
from ..crypto.relation import (
    Context,
    Statement,
    Witness,
    WitnessEntry,
    commitment_symbols,
    decode_bid_message,
    decode_out,
    encode_bid_message,
    encode_out,
    expected_codeword_length,
    leaf_vector,
    outcome_vector,
    tuple_bytes,
    tuple_ok,
)
from ..crypto.rs import rs_encode
from ..domain import to_rational
from ..outcome import SELLER, AuctionOutcome, xor_coin
from ..trace import BROADCAST, PLATFORM, ExecutionTrace
from .network import Blockchain, ConfigInvalid, ProtocolConfig


class IdentityHijack(ConfigInvalid):
    """A script tried to act under an honest player's identity."""


@dataclass(frozen=True)
class Submission:
    """One tuple as it arrives at the platform in step (a)."""

    sender: int
    ident: int
    cm: nitc.TimedCommitment
    pi_com: bytes
    opening: Optional[nitc.Opening] = None


@dataclass(frozen=True)
class PublicView:
    n: int
    digest: bytes
    r_platform: bytes
    digest2: bytes = b""

    def as_tuple(self):
        return (self.n, self.digest, self.r_platform, self.digest2)


@dataclass(frozen=True)
class Delivery:
    index: int
    out: bytes
    proof: MerkleProof


@dataclass
class ProtocolTrace(ExecutionTrace):
    """An execution trace plus the protocol's public artefacts."""

    blockchain: Blockchain = field(default_factory=Blockchain)
    identities: list[int] = field(default_factory=list)
    coin: Optional[bytes] = None
    bids: dict[int, Fraction] = field(default_factory=dict)
    forced: list[int] = field(default_factory=list)
    aborted: bool = False


class Adversary:
    """Base script: corrupts nobody and changes nothing.

    Subclasses list the parties they control in ``corrupted`` (buyer ids,
    ``SELLER`` and/or ``PLATFORM``) and override hooks. Buyer-side hooks
    see only the corrupted players' own state; platform hooks see what
    the platform sees.
    """

    name = "honest"
    corrupted: frozenset = frozenset()

    # strategic buyers and seller
    def buyers(self) -> dict[int, Fraction]:
        """Real corrupted buyers and the bids they commit to honestly."""
        return {}

    def submissions(self, ctx: Context, rng: random.Random, encode) -> list[Submission]:
        """Extra tuples (fake identities, duplicates, garbage)."""
        return []

    def withhold(self, ident: int) -> bool:
        return False

    # strategic platform
    def filter_tuples(self, kept: list[Submission]) -> list[Submission]:
        return kept

    def view(self, player, step: str, view: PublicView) -> PublicView:
        return view

    def outs(self, outs: dict[int, bytes]) -> dict[int, bytes]:
        return outs

    def prove(self, player, witness: Witness) -> object:
        return witness

    def deliver(self, player, delivery: Optional[Delivery]) -> Optional[Delivery]:
        return delivery

    def post(self, view: PublicView) -> Optional[PublicView]:
        return view

    def strategic_ids(self) -> list[int]:
        return []


@dataclass
class _Player:
    ident: int
    value: Optional[Fraction]
    honest: bool
    rng: random.Random
    submission: Optional[Submission] = None
    view: Optional[PublicView] = None
    failed: bool = False


def _player_rng(seed: int, who) -> random.Random:
    return random.Random(f"sealedbid:{seed}:{who}")


def _commit(ctx: Context, player: _Player) -> Submission:
    r = player.rng.randbytes(ctx.coin_bytes)
    msg = encode_bid_message(player.ident, player.value, r, ctx.coin_bytes)
    cm, pi, opening = nitc.com(ctx.nitc, msg, player.rng)
    return Submission(player.ident, player.ident, cm, pi, opening)


def run_protocol(
    config: ProtocolConfig,
    honest_values: Mapping[int, object],
    adversary: Optional[Adversary] = None,
    seller_honest: bool = True,
) -> ProtocolTrace:
    """Execute one instance and return its trace. Failures are recorded in
    the trace (rejections, notes), never raised, except for invalid
    configuration or a script that hijacks an honest identity."""
    adv = adversary or Adversary()
    ctx = config.context()
    rules = config.rules()
    aok = TransparentAoK(ctx, rules)
    rnd = config.rounds()
    trace = ProtocolTrace()

    honest_values = {int(i): to_rational(v) for i, v in honest_values.items()}
    if SELLER in honest_values:
        raise ConfigInvalid("identity 0 is reserved for the seller")
    for i, v in honest_values.items():
        if i < 0 or v not in config.domain:
            raise ConfigInvalid(f"bad honest buyer {i}: {v}")
    seller_honest = seller_honest and SELLER not in adv.corrupted
    platform_honest = PLATFORM not in adv.corrupted

    players: dict[int, _Player] = {}
    for i, v in sorted(honest_values.items()):
        players[i] = _Player(i, v, True, _player_rng(config.seed, i))
    players[SELLER] = _Player(SELLER, None, seller_honest, _player_rng(config.seed, SELLER))
    for i, v in sorted(adv.buyers().items()):
        if i in players:
            raise IdentityHijack(f"identity {i} belongs to an honest player")
        players[i] = _Player(i, to_rational(v), False, _player_rng(config.seed, i))
    trace.honest = {p.ident for p in players.values() if p.honest}
    if platform_honest:
        trace.honest.add(PLATFORM)
    platform_rng = _player_rng(config.seed, PLATFORM)
    adv_rng = _player_rng(config.seed, "adversary")

    def reject(p: _Player, reason: str):
        p.failed = True
        trace.reject(p.ident, reason)

    # (a) every buyer and the seller commit to i || v_i || r_i
    arrived: list[Submission] = []
    for p in players.values():
        p.submission = _commit(ctx, p)
        arrived.append(p.submission)
    extra = adv.submissions(ctx, adv_rng, lambda i, v, r: encode_bid_message(i, v, r, ctx.coin_bytes))
    for s in extra:
        # identity 0 is the one claim step (b) filters explicitly
        claims_honest = s.ident != SELLER and s.ident in players and players[s.ident].honest
        if claims_honest or s.sender in players and players[s.sender].honest:
            raise IdentityHijack(f"script submitted under honest identity {s.ident}")
    arrived.extend(extra)
    for s in arrived:
        try:
            payload = tuple_bytes(ctx, s.ident, s.cm, s.pi_com)
        except (AttributeError, OverflowError, TypeError, ValueError):
            payload = repr(s.cm)
        trace.send(rnd["a"], s.sender, PLATFORM, "a:commit", payload)

    # (b) filter, drop stray identity-0 tuples, suppress duplicates
    valid = []
    for s in arrived:
        if not tuple_ok(ctx, s.cm, s.pi_com):
            trace.notes.append(f"tuple from {s.sender} fails ComVf and is dropped")
        elif s.ident == SELLER and s.sender != SELLER:
            trace.notes.append(f"identity-0 tuple from buyer {s.sender} is dropped")
        else:
            valid.append(s)
    by_id: dict[int, list[Submission]] = {}
    for s in valid:
        by_id.setdefault(s.ident, []).append(s)
    kept = []
    for ident in sorted(by_id):
        group = by_id[ident]
        keep = group[platform_rng.randrange(len(group))] if len(group) > 1 else group[0]
        kept.append(keep)
        for s in group:
            if s is not keep:
                trace.send(rnd["b"], PLATFORM, s.sender, "b:suppressed", None)
                if s.sender in players and players[s.sender].submission is s:
                    reject(players[s.sender], "own tuple suppressed as a duplicate")
    if not platform_honest:
        kept = sorted(adv.filter_tuples(kept), key=lambda s: s.ident)

    # (c) encode, digest, announce (n, digest, r_P)
    ids = [s.ident for s in kept]
    tuples = [tuple_bytes(ctx, s.ident, s.cm, s.pi_com) for s in kept]
    code = rs_encode(commitment_symbols(ctx, tuples)).symbols
    digest, aux = vc_digest(ctx.vc, leaf_vector(code))
    r_platform = config.platform_coin or platform_rng.randbytes(ctx.coin_bytes)
    true_view = PublicView(len(kept), digest, r_platform)
    trace.identities = ids
    for p in players.values():
        view = true_view if platform_honest else adv.view(p.ident, "c", true_view)
        p.view = view
        trace.send(rnd["c"], PLATFORM, p.ident, "c:digest", view.as_tuple()[:3])

    # (d) retrievability challenges, answered against the same aux
    for p in players.values():
        if not p.honest:
            continue
        length = expected_codeword_length(ctx, p.view.n)
        query = por_challenge(p.rng, min(config.kappa, length), length)
        trace.send(rnd["d"], p.ident, PLATFORM, "d:challenge", query)
        try:
            answers, proof = por_respond(ctx.vc, aux, code, query)
        except IndexOutOfRange:
            answers, proof = {}, MerkleProof(len(code), {})
        trace.send(rnd["d"], PLATFORM, p.ident, "d:response", sorted(answers.items()))
        if not por_verify(ctx.vc, p.view.digest, length, query, answers, proof):
            reject(p, "retrievability check failed")

    # (e) openings
    openings: dict[int, list[nitc.Opening]] = {}
    for p in players.values():
        if p.honest and p.failed:
            continue
        if not p.honest and adv.withhold(p.ident):
            continue
        openings.setdefault(p.ident, []).append(p.submission.opening)
        trace.send(rnd["e"], p.ident, PLATFORM, "e:open", p.submission.opening.message)
    for s in extra:
        if s.opening is not None and not adv.withhold(s.ident):
            openings.setdefault(s.ident, []).append(s.opening)
            trace.send(rnd["e"], s.sender, PLATFORM, "e:open", s.opening.message)

    # (f) forced decryption of whatever was not opened correctly
    entries: dict[int, dict] = {}
    opened: set[int] = set()
    for s in kept:
        good = [op for op in openings.get(s.ident, []) if nitc.dec_vf(ctx.nitc, s.cm, op.message, op)]
        if good:
            entries[s.ident] = {"pi": good[0], "message": good[0].message}
            opened.add(s.ident)
            continue
        try:
            forced = nitc.fdec(ctx.nitc, s.cm, s.pi_com)
        except nitc.MalformedCommitment:
            trace.blockchain.post(PLATFORM, None)
            trace.send(rnd["f"], PLATFORM, BROADCAST, "f:abort", None)
            trace.aborted = True
            for p in players.values():
                if p.honest:
                    reject(p, "forced decryption failed")
            trace.decisions[PLATFORM] = False
            return trace
        if not forced.consistent:
            trace.notes.append(f"forced opening of {s.ident} is inconsistent with its tag")
        trace.forced.append(s.ident)
        entries[s.ident] = {"pi": forced, "message": forced.message}

    # (g) outcome, per-identity outputs, digest'
    for s in kept:
        value, r, well_formed = decode_bid_message(ctx, s.ident, entries[s.ident]["message"])
        if not well_formed:
            trace.notes.append(f"committed message of {s.ident} is malformed and counts as no bid")
        entries[s.ident].update(value=value, r=r)
    coin = xor_coin([entries[j]["r"] for j in ids] + [r_platform])
    bids = {j: entries[j]["value"] for j in ids if j != SELLER and entries[j]["value"] is not None}
    outcome = rules.outcome(bids, coin)
    trace.coin, trace.bids, trace.outcome = coin, bids, outcome
    outs = {j: encode_out(outcome, j) for j in ids}
    if not platform_honest:
        outs = adv.outs(dict(outs))
    digest2, aux2 = vc_digest(ctx.vc, outcome_vector(tuples, [outs[j] for j in ids]))
    true_view = PublicView(len(kept), digest, r_platform, digest2)
    for p in players.values():
        view = true_view if platform_honest else adv.view(p.ident, "g", true_view)
        p.view = PublicView(p.view.n, p.view.digest, p.view.r_platform, view.digest2)
        trace.send(rnd["g"], PLATFORM, p.ident, "g:digest2", view.digest2)

    # (h) prove membership in the relation to every buyer and the seller
    witness = Witness(
        tuple(code), tuple(ids),
        {j: WitnessEntry(s.cm, s.pi_com, entries[j]["pi"], entries[j]["message"],
                         entries[j]["value"], entries[j]["r"], outs[j])
         for j, s in zip(ids, kept)},
    )
    crs = aok.gen()
    proof = aok.prove(crs, Statement(digest, digest2, len(kept), r_platform), witness)
    for p in players.values():
        sent = proof if platform_honest else adv.prove(p.ident, proof)
        trace.send(rnd["h"], PLATFORM, p.ident, "h:aok", Statement(digest, digest2, len(kept), r_platform))
        if not p.honest:
            continue
        statement = Statement(p.view.digest, p.view.digest2, p.view.n, p.view.r_platform)
        verdict = aok.check(statement, sent)
        if not verdict.ok:
            reject(p, f"outcome proof rejected: {verdict.failed}")

    # (i) out_i with a membership proof against digest'
    position = {j: idx for idx, j in enumerate(ids)}
    for p in players.values():
        delivery = None
        if p.ident in opened and p.ident in position:
            idx = position[p.ident]
            delivery = Delivery(idx, outs[p.ident], vc_open(ctx.vc, aux2, [idx], len(ids)))
        if not platform_honest:
            delivery = adv.deliver(p.ident, delivery)
        if delivery is not None:
            trace.send(rnd["i"], PLATFORM, p.ident, "i:out", delivery.out)
        if not p.honest:
            if delivery is not None:
                trace.private_outcomes[p.ident] = _safe_decode(delivery.out)
            continue
        if delivery is None:
            reject(p, "no outcome delivered")
            continue
        own = tuple_bytes(ctx, p.ident, p.submission.cm, p.submission.pi_com)
        leaf = {delivery.index: outcome_vector([own], [delivery.out])[0]}
        if not vc_vf(ctx.vc, p.view.n, p.view.digest2, [delivery.index], leaf, delivery.proof):
            reject(p, "outcome membership proof rejected")
            continue
        decoded = _safe_decode(delivery.out)
        if decoded is None:
            reject(p, "outcome does not decode")
            continue
        trace.private_outcomes[p.ident] = decoded
    for s in extra:
        if s.ident in opened and s.ident not in players:
            trace.private_outcomes[s.ident] = _safe_decode(outs[s.ident])

    # (j) blockchain post; accept iff everything matched
    posted = true_view if platform_honest else adv.post(true_view)
    if posted is not None:
        trace.blockchain.post(PLATFORM, posted.as_tuple())
        trace.send(rnd["j"], PLATFORM, BROADCAST, "j:post", posted.as_tuple())
    if platform_honest:
        trace.decisions[PLATFORM] = True
    chain = [payload for author, payload in trace.blockchain.read() if author == PLATFORM]
    for p in players.values():
        if not p.honest:
            continue
        if not chain or chain[-1] is None:
            reject(p, "nothing on the blockchain")
        elif chain[-1] != p.view.as_tuple():
            reject(p, "local view disagrees with the blockchain")
        elif not p.failed:
            trace.decisions[p.ident] = True
    return trace


def _safe_decode(out: bytes):
    try:
        return decode_out(out)
    except (ValueError, ZeroDivisionError):
        return None


def realised_outcome(trace: ProtocolTrace) -> Optional[AuctionOutcome]:
    """The platform's outcome if every honest player accepted, else None."""
    return trace.outcome if trace.safe else None
