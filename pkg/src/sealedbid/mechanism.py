"""Ideal auctions: second price with reserve, the ascending auction, the
optimal-payment oracle and the ideal-functionality loop.

Every mechanism exposes the same small surface used by the incentive
harness and the protocol compiler:

``outcome(bids, coin)``
    Deterministic outcome for one coin string.
``outcome_distribution(bids)``
    Exact ``[(probability, outcome), ...]`` over all internal randomness.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Protocol, Sequence

from .domain import DiscreteDistribution, NoSuccessor, ValueDomain, to_rational
from .outcome import (
    SELLER,
    AuctionOutcome,
    BidsLike,
    DuplicateIdentity,
    InvalidBid,
    as_bids,
)
from .trace import BROADCAST, PLATFORM, ExecutionTrace

COIN_BYTES = 32


class NonMonotoneAllocation(ValueError):
    pass


class EnumerationTooLarge(RuntimeError):
    pass


def coin_int(coin: bytes) -> int:
    return int.from_bytes(bytes(coin), "big")


def lehmer_permutation(index: int, items: Sequence) -> list:
    """The ``index``-th permutation of ``items`` in lexicographic order
    (``index`` taken modulo ``len(items)!``)."""
    pool = list(items)
    index %= math.factorial(len(pool))
    out = []
    for remaining in range(len(pool), 0, -1):
        block = math.factorial(remaining - 1)
        pos, index = divmod(index, block)
        out.append(pool.pop(pos))
    return out


def tiebreak_priority(coin: bytes, identities: Iterable[int]) -> dict[int, int]:
    """Uniform priority order over ``identities`` derived from ``coin``.

    The coin, read as an integer, indexes a permutation of the sorted
    identities; sorting by (bid desc, priority) then breaks every tie
    uniformly when the coin is uniform.
    """
    perm = lehmer_permutation(coin_int(coin), sorted(identities))
    return {ident: rank for rank, ident in enumerate(perm)}


def tie_priorities(bids: Mapping[int, Fraction]) -> Iterable[dict[int, int]]:
    """All relative orders of equal bids, each equally likely under a uniform coin."""
    groups: dict[Fraction, list[int]] = {}
    for ident, b in bids.items():
        groups.setdefault(b, []).append(ident)
    perms = [list(itertools.permutations(sorted(g))) for g in groups.values()]
    for combo in itertools.product(*perms):
        prio = {}
        for group in combo:
            for rank, ident in enumerate(group):
                prio[ident] = rank
        yield prio


class Mechanism(Protocol):
    domain: ValueDomain
    k: int

    def outcome(self, bids: BidsLike, coin: bytes) -> AuctionOutcome: ...

    def outcome_distribution(self, bids: BidsLike) -> list[tuple[Fraction, AuctionOutcome]]: ...


def _merge(dist: Iterable[tuple[Fraction, AuctionOutcome]]) -> list[tuple[Fraction, AuctionOutcome]]:
    merged: dict[str, list] = {}
    for w, out in dist:
        key = out.dumps()
        if key in merged:
            merged[key][0] += w
        else:
            merged[key] = [w, out]
    return [(w, o) for w, o in merged.values()]


@dataclass
class ExpectedOutcome:
    """Allocation probabilities and expected payments over internal coins."""

    x: dict[int, Fraction]
    p: dict[int, Fraction]
    seller_revenue: Fraction
    platform_revenue: Fraction

    @classmethod
    def from_distribution(cls, dist) -> "ExpectedOutcome":
        x: dict[int, Fraction] = {}
        p: dict[int, Fraction] = {}
        mu = plat = Fraction(0)
        for w, out in dist:
            for i, a in out.allocations.items():
                x[i] = x.get(i, Fraction(0)) + w * a
            for i, pay in out.payments.items():
                p[i] = p.get(i, Fraction(0)) + w * pay
            mu += w * out.seller_revenue
            plat += w * out.platform_revenue
        return cls(x, p, mu, plat)

    @property
    def revenue(self) -> Fraction:
        return self.seller_revenue + self.platform_revenue


class SecondPriceAuction:
    """k-unit second price with reserve; platform keeps nothing.

    Bids below ``reserve`` are discarded, the rest ranked with uniform tie
    breaking. Confirmed bids equal to the first rejected bid (or to the
    reserve when there are at most ``k`` bids) pay that bid; strictly higher
    confirmed bids pay a ``q``-mix of it and the next tick, with
    ``q = (alpha + 1) / (A + 1)``.
    """

    name = "second-price"

    def __init__(self, domain: ValueDomain, reserve: Fraction, k: int):
        reserve = to_rational(reserve)
        if reserve not in domain:
            raise InvalidBid(f"reserve {reserve} is not a tick")
        if k < 1:
            raise ValueError("k must be positive")
        self.domain = domain
        self.reserve = reserve
        self.k = k

    @classmethod
    def for_distribution(cls, dist: DiscreteDistribution, k: int) -> "SecondPriceAuction":
        return cls(dist.domain, dist.reserve(), k)

    def __repr__(self):
        return f"SecondPriceAuction(T={len(self.domain)}, reserve={self.reserve}, k={self.k})"

    def _price(self, threshold: Fraction, alpha: int, count: int) -> Fraction:
        q = Fraction(alpha + 1, count + 1)
        try:
            above = self.domain.next_tick(threshold)
        except NoSuccessor:
            # only reachable if some confirmed bid exceeds the top tick
            raise AssertionError("strictly higher bid above the top tick") from None
        return threshold * q + above * (1 - q)

    def outcome_for_priority(self, bids: Mapping[int, Fraction], priority: Mapping[int, int]) -> AuctionOutcome:
        kept = [(i, b) for i, b in bids.items() if b >= self.reserve]
        kept.sort(key=lambda ib: (-ib[1], priority[ib[0]]))
        n = len(kept)
        kp = min(self.k, n)
        confirmed = kept[:kp]
        threshold = kept[kp][1] if n > self.k else self.reserve
        count = sum(1 for _, b in kept if b == threshold)
        alpha = sum(1 for _, b in confirmed if b == threshold)
        allocations = {i: 0 for i in bids}
        payments = {i: Fraction(0) for i in bids}
        high_price = None
        for i, b in confirmed:
            allocations[i] = 1
            if b == threshold:
                payments[i] = threshold
            else:
                if high_price is None:
                    high_price = self._price(threshold, alpha, count)
                payments[i] = high_price
        total = sum(payments.values(), Fraction(0))
        return AuctionOutcome(allocations, payments, kp, total, Fraction(0))

    def outcome(self, bids: BidsLike, coin: bytes) -> AuctionOutcome:
        bids = as_bids(bids, self.domain)
        return self.outcome_for_priority(bids, tiebreak_priority(coin, bids))

    def outcome_distribution(self, bids: BidsLike) -> list[tuple[Fraction, AuctionOutcome]]:
        bids = as_bids(bids, self.domain)
        prios = list(tie_priorities(bids))
        w = Fraction(1, len(prios))
        return _merge((w, self.outcome_for_priority(bids, pr)) for pr in prios)

    def expected(self, bids: BidsLike) -> ExpectedOutcome:
        """Closed form: the boundary group of equal bids shares its slots evenly."""
        bids = as_bids(bids, self.domain)
        kept = sorted((b for b in bids.values() if b >= self.reserve), reverse=True)
        n = len(kept)
        kp = min(self.k, n)
        x = {i: Fraction(0) for i in bids}
        p = {i: Fraction(0) for i in bids}
        if kp == 0:
            return ExpectedOutcome(x, p, Fraction(0), Fraction(0))
        threshold = kept[kp] if n > self.k else self.reserve
        count = kept.count(threshold)
        alpha = sum(1 for b in kept[:kp] if b == threshold)
        last = kept[kp - 1]
        strictly_above = sum(1 for b in kept if b > last)
        group = kept.count(last)
        share = Fraction(kp - strictly_above, group)
        for i, b in bids.items():
            if b < self.reserve or b < last:
                continue
            x[i] = Fraction(1) if b > last else share
            price = threshold if b == threshold else self._price(threshold, alpha, count)
            p[i] = x[i] * price
        mu = sum(p.values(), Fraction(0))
        return ExpectedOutcome(x, p, mu, Fraction(0))


def second_price_rules(
    domain: ValueDomain, reserve_price, k: int, bids: BidsLike, coin: bytes
) -> AuctionOutcome:
    return SecondPriceAuction(domain, reserve_price, k).outcome(bids, coin)


# -- ascending auction -------------------------------------------------------


class BuyerBehaviour:
    """How a buyer acts in the ascending auction. Honest by default."""

    def __init__(self, value: Fraction):
        self.value = to_rational(value)

    def register(self, floor_price: Fraction) -> bool:
        return self.value >= floor_price

    def respond(self, price: Fraction) -> Optional[bool]:
        """``True`` = ok, ``False`` = drop, ``None`` = stay silent."""
        return self.value > price


class ReplaceValue(BuyerBehaviour):
    """Act honestly but as if the value were ``bid``."""

    def __init__(self, value, bid):
        super().__init__(value)
        self.bid = to_rational(bid)

    def register(self, floor_price):
        return self.bid >= floor_price

    def respond(self, price):
        return self.bid > price


@dataclass
class AscendingResult:
    tau: Optional[Fraction]
    outcome: AuctionOutcome
    trace: ExecutionTrace
    tau_index: Optional[int] = None


@dataclass
class _RoundState:
    tau_index: Optional[int]
    remaining: list[int]
    dropped: list[int]
    all_buyers: list[int]
    trace: ExecutionTrace = field(default_factory=ExecutionTrace)


class AscendingAuction:
    """Ascending clock auction starting at the reserve with a zero platform fee.

    Buyers with value at least the reserve register; each round the price
    moves one tick up and a buyer stays iff its value strictly exceeds the
    price. The clock stops the first time at most ``k`` buyers remain; if it
    stopped after the opening round, the shortfall is filled uniformly from
    that round's droppers. Winners pay the stopping price.
    """

    name = "ascending"

    def __init__(self, domain: ValueDomain, reserve: Fraction, k: int):
        reserve = to_rational(reserve)
        if reserve not in domain:
            raise InvalidBid(f"reserve {reserve} is not a tick")
        if k < 1:
            raise ValueError("k must be positive")
        self.domain = domain
        self.reserve = reserve
        self.k = k

    @classmethod
    def for_distribution(cls, dist: DiscreteDistribution, k: int) -> "AscendingAuction":
        return cls(dist.domain, dist.reserve(), k)

    def __repr__(self):
        return f"AscendingAuction(T={len(self.domain)}, reserve={self.reserve}, k={self.k})"

    def _rounds(self, behaviours: Mapping[int, BuyerBehaviour]) -> _RoundState:
        ticks = self.domain.ticks
        start = self.domain.index(self.reserve)
        tr = ExecutionTrace()
        buyers = sorted(behaviours)
        registered = []
        for i in buyers:
            if behaviours[i].register(self.reserve):
                tr.send(0, i, PLATFORM, "register")
                registered.append(i)
        active = list(registered)
        for idx in range(start, len(ticks)):
            rnd = idx - start + 1
            price = ticks[idx]
            dropped = []
            for i in active:
                answer = behaviours[i].respond(price)
                if answer is None:
                    dropped.append(i)
                    continue
                tr.send(rnd, i, PLATFORM, "bid", "ok" if answer else "bot")
                if not answer:
                    dropped.append(i)
            active = [i for i in active if i not in dropped]
            if len(active) <= self.k:
                return _RoundState(idx, active, dropped, buyers, tr)
        return _RoundState(None, active, [], buyers, tr)

    def _finish(self, state: _RoundState, extra: Sequence[int]) -> AscendingResult:
        tr = state.trace
        start = self.domain.index(self.reserve)
        zero = Fraction(0)
        if state.tau_index is None:
            rnd = len(self.domain) - start + 1
            tr.send(rnd, PLATFORM, BROADCAST, "post", "bot")
            for i in state.all_buyers:
                tr.decisions[i] = True
            tr.decisions[SELLER] = tr.decisions[PLATFORM] = True
            tr.honest = set(tr.decisions)
            outcome = AuctionOutcome.empty(state.all_buyers)
            tr.outcome = outcome
            return AscendingResult(None, outcome, tr)
        idx = state.tau_index
        price = self.domain.ticks[idx]
        rnd = idx - start + 1
        winners = list(state.remaining) + list(extra)
        tr.send(rnd, PLATFORM, BROADCAST, "post", str(idx))
        for i in state.all_buyers:
            tr.send(rnd, PLATFORM, i, "stop", 1 if i in winners else 0)
        # the seller hears the actual number of winners (see notes on capping)
        tr.send(rnd, PLATFORM, SELLER, "stop", len(winners))
        if idx != start and len(extra) < self.k - len(state.remaining):
            tr.notes.append("fewer droppers than free slots; seller told actual winner count")
        alloc = {i: int(i in winners) for i in state.all_buyers}
        pay = {i: price if i in winners else zero for i in state.all_buyers}
        outcome = AuctionOutcome(alloc, pay, len(winners), price * len(winners), zero)
        for i in state.all_buyers:
            tr.decisions[i] = True
            tr.private_outcomes[i] = outcome.private(i)
        tr.decisions[SELLER] = tr.decisions[PLATFORM] = True
        tr.private_outcomes[SELLER] = outcome.private(SELLER)
        tr.honest = set(tr.decisions)
        tr.outcome = outcome
        return AscendingResult(price, outcome, tr, idx)

    def _fill(self, state: _RoundState) -> tuple[list[int], int]:
        if state.tau_index is None or state.tau_index == self.domain.index(self.reserve):
            return [], 0
        slots = self.k - len(state.remaining)
        return sorted(state.dropped), min(slots, len(state.dropped))

    def run(
        self,
        values: BidsLike,
        strategies: Mapping[int, BuyerBehaviour] | None = None,
        coin: bytes = bytes(COIN_BYTES),
    ) -> AscendingResult:
        values = as_bids(values, self.domain)
        behaviours = {i: BuyerBehaviour(v) for i, v in values.items()}
        behaviours.update(strategies or {})
        state = self._rounds(behaviours)
        pool, m = self._fill(state)
        combos = list(itertools.combinations(pool, m))
        extra = combos[coin_int(coin) % len(combos)]
        return self._finish(state, extra)

    def outcome(self, bids: BidsLike, coin: bytes) -> AuctionOutcome:
        return self.run(bids, coin=coin).outcome

    def outcome_distribution(self, bids: BidsLike) -> list[tuple[Fraction, AuctionOutcome]]:
        bids = as_bids(bids, self.domain)
        state = self._rounds({i: BuyerBehaviour(v) for i, v in bids.items()})
        pool, m = self._fill(state)
        combos = list(itertools.combinations(pool, m))
        w = Fraction(1, len(combos))
        results = []
        for extra in combos:
            st = _RoundState(state.tau_index, state.remaining, state.dropped, state.all_buyers, ExecutionTrace())
            results.append((w, self._finish(st, extra).outcome))
        return _merge(results)

    def expected(self, bids: BidsLike) -> ExpectedOutcome:
        return ExpectedOutcome.from_distribution(self.outcome_distribution(bids))


def ascending_auction(
    domain: ValueDomain,
    dist: DiscreteDistribution | None,
    k: int,
    values: BidsLike,
    strategies: Mapping[int, BuyerBehaviour] | None = None,
    coin: bytes = bytes(COIN_BYTES),
    reserve=None,
) -> AscendingResult:
    if reserve is None:
        if dist is None:
            raise ValueError("need a distribution or an explicit reserve")
        reserve = dist.reserve()
    return AscendingAuction(domain, reserve, k).run(values, strategies, coin)


# -- Myerson / Elkind oracles -----------------------------------------------

AllocationFn = Callable[[Fraction], Fraction]


def optimal_payment(domain: ValueDomain, allocation_fn: AllocationFn, bid) -> Fraction:
    """Revenue-optimal payment for a monotone own-bid allocation curve.

    ``allocation_fn(theta)`` is the winning probability at own bid ``theta``
    with the other bids held fixed. The curve is swept from the bottom tick
    and must not decrease.
    """
    bid = to_rational(bid)
    top = domain.index(bid)
    ticks = domain.ticks
    rebate = Fraction(0)
    prev_x = Fraction(allocation_fn(ticks[0]))
    for j in range(1, top + 1):
        rebate += (ticks[j] - ticks[j - 1]) * prev_x
        x = Fraction(allocation_fn(ticks[j]))
        if x < prev_x:
            raise NonMonotoneAllocation(f"allocation drops from {prev_x} to {x} at {ticks[j]}")
        prev_x = x
    return bid * prev_x - rebate


def _profiles(dist: DiscreteDistribution, n: int, limit: int):
    support = dist.support()
    if len(support) ** n > limit:
        raise EnumerationTooLarge(f"{len(support)}^{n} profiles exceed {limit}")
    for combo in itertools.product(support, repeat=n):
        w = Fraction(1)
        for _, pr in combo:
            w *= pr
        yield w, tuple(t for t, _ in combo)


def expected_virtual_surplus(
    dist: DiscreteDistribution,
    allocation_fn: Callable[[tuple[Fraction, ...]], Fraction],
    i: int,
    n: int,
    limit: int = 10**6,
) -> Fraction:
    """Exact ``E[x_i(b) * phi(b_i)]`` over ``b ~ dist^n``.

    ``allocation_fn`` receives the whole profile and returns buyer ``i``'s
    winning probability (``i`` indexes the profile, 0-based). Only profiles
    with positive probability are visited, so zero-density ticks never need
    a virtual value.
    """
    total = Fraction(0)
    for w, prof in _profiles(dist, n, limit):
        x = Fraction(allocation_fn(prof))
        if x:
            total += w * x * dist.phi(prof[i])
    return total


def expected_payment(
    mechanism: Mechanism, dist: DiscreteDistribution, i: int, n: int, limit: int = 10**6
) -> Fraction:
    """Exact expected payment of buyer ``i`` (0-based) when ``n`` buyers draw from ``dist``."""
    total = Fraction(0)
    for w, prof in _profiles(dist, n, limit):
        exp = _expected(mechanism, dict(enumerate(prof, start=1)))
        total += w * exp.p[i + 1]
    return total


def _expected(mechanism, bids) -> ExpectedOutcome:
    if hasattr(mechanism, "expected"):
        return mechanism.expected(bids)
    return ExpectedOutcome.from_distribution(mechanism.outcome_distribution(bids))


def profile_allocation(mechanism: Mechanism, i: int) -> Callable[[tuple[Fraction, ...]], Fraction]:
    """Adapt a mechanism to the profile-indexed allocation oracle above."""

    def x(prof):
        return _expected(mechanism, dict(enumerate(prof, start=1))).x[i + 1]

    return x


def own_bid_curve(mechanism: Mechanism, ident: int, others: Mapping[int, Fraction]):
    """``(x(theta), p(theta))`` for buyer ``ident`` against fixed ``others``."""
    cache: dict[Fraction, ExpectedOutcome] = {}

    def at(theta):
        if theta not in cache:
            bids = dict(others)
            bids[ident] = theta
            cache[theta] = _expected(mechanism, bids)
        return cache[theta]

    return (lambda t: at(t).x[ident]), (lambda t: at(t).p[ident])


# -- ideal functionality ------------------------------------------------------


class IdealHook:
    """Strategic platform/seller interface to the ideal functionality.

    The honest hook injects nothing and always approves.
    """

    def inject(self, n_honest: int) -> list[tuple[int, Fraction]]:
        return []

    def approve(self, strategic_outcomes: Mapping[int, tuple]) -> bool:
        return True


@dataclass
class IdealRun:
    outcome: Optional[AuctionOutcome]
    aborted: bool
    coin: bytes
    n_honest: int
    strategic_ids: list[int]

    def utility_zeroed(self) -> bool:
        return self.aborted


def run_ideal_auction(
    rules: Mechanism,
    honest_bids: BidsLike,
    hook: IdealHook | None = None,
    coin: bytes | None = None,
    rng: random.Random | None = None,
) -> IdealRun:
    """One pass of the trusted functionality.

    Collect honest bids, tell the hook how many arrived, accept its injected
    bids, toss the coin, reveal the strategic identities' outcomes (and the
    seller's) to the hook, then finalise on approval. On abort the outcome
    is ``None`` and every utility is zero.
    """
    hook = hook or IdealHook()
    honest = as_bids(honest_bids)
    injected = hook.inject(len(honest))
    bids = dict(honest)
    strategic = []
    for ident, b in injected:
        ident = int(ident)
        if ident in bids:
            raise DuplicateIdentity(f"identity {ident} already bid")
        bids[ident] = to_rational(b)
        strategic.append(ident)
    if coin is None:
        coin = (rng or random.Random()).randbytes(COIN_BYTES)
    outcome = rules.outcome(bids, coin)
    revealed = {i: outcome.private(i) for i in strategic}
    revealed[SELLER] = outcome.private(SELLER)
    if not hook.approve(revealed):
        return IdealRun(None, True, coin, len(honest), strategic)
    return IdealRun(outcome, False, coin, len(honest), strategic)
