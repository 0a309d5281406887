"""Scripted deviations and the trace property each one must produce."""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Mapping, Optional

from ..crypto import nitc
from ..crypto.relation import Context, decode_out
from ..crypto.encoding import pack, int_bytes
from ..outcome import SELLER
from ..trace import PLATFORM
from .network import ProtocolConfig
from .protocol import Adversary, Delivery, Submission

FAKE_BASE = 1_000_000


def _commit(ctx: Context, rng, encode, ident: int, value, sender: Optional[int] = None) -> Submission:
    r = rng.randbytes(ctx.coin_bytes)
    cm, pi, opening = nitc.com(ctx.nitc, encode(ident, value, r), rng)
    return Submission(ident if sender is None else sender, ident, cm, pi, opening)


def _victim(honest: Mapping[int, Fraction]) -> int:
    return min(honest) if honest else SELLER


def _mutated_out(blob: bytes, ident: int) -> bytes:
    x, p = decode_out(blob)
    role = b"seller" if ident == SELLER else b"buyer"
    if x:
        p = p + Fraction(1, 10)
    else:
        x, p = 1, Fraction(0)
    return pack(role, int_bytes(int(x), 8), f"{p.numerator}/{p.denominator}".encode())


# -- strategic buyers / seller with an honest platform ------------------------------


class WithholdOpening(Adversary):
    """A corrupted buyer commits and then never opens."""

    name = "withhold-opening"

    def __init__(self, ident: int, value):
        self.ident, self.value = ident, Fraction(value)
        self.corrupted = frozenset({ident})

    def buyers(self):
        return {self.ident: self.value}

    def withhold(self, ident):
        return ident == self.ident


class GarbageCommitment(Adversary):
    """A corrupted buyer sends a tuple that fails ComVf."""

    name = "garbage-commitment"

    def __init__(self, ident: int):
        self.ident = ident
        self.corrupted = frozenset({ident})

    def submissions(self, ctx, rng, encode):
        cm = nitc.TimedCommitment(1, rng.randbytes(ctx.message_len), rng.randbytes(32))
        return [Submission(self.ident, self.ident, cm, nitc.pi_com(ctx.nitc, cm))]


class InconsistentCommitment(Adversary):
    """Well-formed ``u`` but a random ciphertext and tag; never opened.

    Forced decryption yields bytes that do not match the tag and do not
    decode, so the identity takes part with no bid.
    """

    name = "inconsistent-commitment"

    def __init__(self, ident: int):
        self.ident = ident
        self.corrupted = frozenset({ident})

    def submissions(self, ctx, rng, encode):
        u = pow(ctx.nitc.g, rng.randrange(2, ctx.nitc.N), ctx.nitc.N)
        cm = nitc.TimedCommitment(u, rng.randbytes(ctx.message_len), rng.randbytes(32))
        return [Submission(self.ident, self.ident, cm, nitc.pi_com(ctx.nitc, cm))]


class FakeBidInjection(Adversary):
    """A corrupted buyer bids honestly and adds tuples under fresh identities."""

    name = "fake-bids"

    def __init__(self, ident: int, value, fake_bids):
        self.ident, self.value = ident, Fraction(value)
        self.fake = [Fraction(b) for b in fake_bids]
        self.corrupted = frozenset({ident})

    def buyers(self):
        return {self.ident: self.value}

    def submissions(self, ctx, rng, encode):
        return [_commit(ctx, rng, encode, FAKE_BASE + j, b) for j, b in enumerate(self.fake)]

    def strategic_ids(self):
        return [self.ident] + [FAKE_BASE + j for j in range(len(self.fake))]


class SellerShill(Adversary):
    """The seller submits extra buyer-identity commitments."""

    name = "seller-shill"
    corrupted = frozenset({SELLER})

    def __init__(self, shill_bids):
        self.shills = [Fraction(b) for b in shill_bids]

    def submissions(self, ctx, rng, encode):
        return [_commit(ctx, rng, encode, FAKE_BASE + j, b) for j, b in enumerate(self.shills)]

    def strategic_ids(self):
        return [FAKE_BASE + j for j in range(len(self.shills))]


class DuplicateTuple(Adversary):
    """A corrupted buyer sends a second tuple under its own identity."""

    name = "duplicate-tuple"

    def __init__(self, ident: int, value, second_value):
        self.ident, self.value, self.second = ident, Fraction(value), Fraction(second_value)
        self.corrupted = frozenset({ident})

    def buyers(self):
        return {self.ident: self.value}

    def submissions(self, ctx, rng, encode):
        return [_commit(ctx, rng, encode, self.ident, self.second)]


class StrayZeroIdentity(Adversary):
    """A corrupted buyer submits a tuple claiming the seller's identity."""

    name = "zero-identity"

    def __init__(self, ident: int):
        self.ident = ident
        self.corrupted = frozenset({ident})

    def submissions(self, ctx, rng, encode):
        return [_commit(ctx, rng, encode, SELLER, None, sender=self.ident)]


# -- strategic platform ------------------------------------------------------------


class PlatformFakeBids(Adversary):
    """The platform adds its own tuples; the relation still holds."""

    name = "platform-fake-bids"
    corrupted = frozenset({PLATFORM})

    def __init__(self, fake_bids):
        self.fake = [Fraction(b) for b in fake_bids]

    def submissions(self, ctx, rng, encode):
        return [_commit(ctx, rng, encode, FAKE_BASE + j, b) for j, b in enumerate(self.fake)]

    def strategic_ids(self):
        return [FAKE_BASE + j for j in range(len(self.fake))]


class DigestEquivocation(Adversary):
    """Sends the victim a different ``digest`` than everyone else."""

    name = "digest-equivocation"
    corrupted = frozenset({PLATFORM})

    def __init__(self, victim: int):
        self.victim = victim

    def view(self, player, step, view):
        if player == self.victim and step == "c":
            flipped = bytes([view.digest[0] ^ 1]) + view.digest[1:]
            return replace(view, digest=flipped)
        return view


class OutcomeMutation(Adversary):
    """Changes the victim's ``out``.

    ``consistent=False`` alters only the delivered value; ``consistent=True``
    also folds the altered value into ``digest'``.
    """

    corrupted = frozenset({PLATFORM})

    def __init__(self, victim: int, consistent: bool):
        self.victim, self.consistent = victim, consistent
        self.name = "mutate-outcome-digest" if consistent else "mutate-outcome"

    def outs(self, outs):
        if self.consistent and self.victim in outs:
            outs[self.victim] = _mutated_out(outs[self.victim], self.victim)
        return outs

    def deliver(self, player, delivery):
        if not self.consistent and player == self.victim and delivery is not None:
            return Delivery(delivery.index, _mutated_out(delivery.out, player), delivery.proof)
        return delivery


class DroppedHonestTuple(Adversary):
    """Leaves the victim's tuple out of the committed vector."""

    name = "drop-honest-tuple"
    corrupted = frozenset({PLATFORM})

    def __init__(self, victim: int):
        self.victim = victim

    def filter_tuples(self, kept):
        return [s for s in kept if s.ident != self.victim]


class AbortAfterOutcome(Adversary):
    """Learns the outcome and never posts to the blockchain."""

    name = "abort-after-outcome"
    corrupted = frozenset({PLATFORM})

    def post(self, view):
        return None


# -- the suite -----------------------------------------------------------------------


@dataclass(frozen=True)
class AttackCase:
    """``build(honest_values, rng)`` returns the script; ``expect_safe`` is the
    asserted trace property; ``platform`` marks platform-corrupting scripts."""

    name: str
    build: Callable[[Mapping[int, Fraction], random.Random], Adversary]
    expect_safe: bool
    platform: bool


def _fresh(honest) -> int:
    return max(honest, default=0) + 1


def attack_suite(config: ProtocolConfig) -> list[AttackCase]:
    ticks = list(config.domain)

    def pick(rng):
        return rng.choice(ticks)

    return [
        AttackCase("withhold-opening", lambda h, r: WithholdOpening(_fresh(h), pick(r)), True, False),
        AttackCase("garbage-commitment", lambda h, r: GarbageCommitment(_fresh(h)), True, False),
        AttackCase("inconsistent-commitment", lambda h, r: InconsistentCommitment(_fresh(h)), True, False),
        AttackCase("fake-bids", lambda h, r: FakeBidInjection(_fresh(h), pick(r), [pick(r), pick(r)]),
                   True, False),
        AttackCase("seller-shill", lambda h, r: SellerShill([pick(r)]), True, False),
        AttackCase("duplicate-tuple", lambda h, r: DuplicateTuple(_fresh(h), pick(r), pick(r)), True, False),
        AttackCase("zero-identity", lambda h, r: StrayZeroIdentity(_fresh(h)), True, False),
        AttackCase("platform-fake-bids", lambda h, r: PlatformFakeBids([pick(r)]), True, True),
        AttackCase("digest-equivocation", lambda h, r: DigestEquivocation(_victim(h)), False, True),
        AttackCase("mutate-outcome", lambda h, r: OutcomeMutation(_victim(h), False), False, True),
        AttackCase("mutate-outcome-digest", lambda h, r: OutcomeMutation(_victim(h), True), False, True),
        AttackCase("drop-honest-tuple", lambda h, r: DroppedHonestTuple(_victim(h)), False, True),
        AttackCase("abort-after-outcome", lambda h, r: AbortAfterOutcome(), False, True),
    ]


def attack_by_name(config: ProtocolConfig, name: str) -> AttackCase:
    for case in attack_suite(config):
        if case.name == name:
            return case
    raise KeyError(name)
