"""Coalition utilities and an incentive-compatibility falsification harness.

The harness evaluates a finite suite of deviations against honest play,
either exactly (rational arithmetic over every value profile and every
internal coin outcome) or by seeded Monte Carlo. A clean report means no
violation was found among the scripts tried; it is not a proof of IC.
"""

from __future__ import annotations

import enum
import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .domain import DiscreteDistribution, ValueDomain, to_rational
from .mechanism import (
    EnumerationTooLarge,
    Mechanism,
    _expected,
    _profiles,
)
from .outcome import SELLER, AuctionOutcome

Z99 = 2.5758293035489004  # two-sided 99% normal quantile


class InvalidScriptForCoalition(ValueError):
    pass


class HypothesisViolated(AssertionError):
    def __init__(self, message, witness):
        super().__init__(f"{message}: {witness}")
        self.witness = witness


@dataclass(frozen=True)
class Coalition:
    includes_platform: bool = False
    includes_seller: bool = False
    true_values: Mapping[int, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        vals = {int(i): to_rational(v) for i, v in self.true_values.items()}
        if SELLER in vals:
            raise ValueError("identity 0 is the seller, not a buyer")
        object.__setattr__(self, "true_values", vals)
        c = len(vals)
        if not self.includes_platform and c > 1:
            raise ValueError("buyer coalitions without the platform have a single member")
        if not self.includes_platform and self.includes_seller and c:
            raise ValueError("seller-buyer coalitions are not modelled")
        if self.includes_platform and self.includes_seller and c:
            raise ValueError("platform+seller coalitions carry no buyers")
        if not (self.includes_platform or self.includes_seller or c):
            raise ValueError("empty coalition")

    @property
    def buyer_members(self) -> frozenset:
        return frozenset(self.true_values)

    @classmethod
    def buyer(cls, ident: int, value) -> "Coalition":
        return cls(true_values={ident: value})

    @classmethod
    def seller(cls) -> "Coalition":
        return cls(includes_seller=True)

    @classmethod
    def platform(cls, buyers: Mapping[int, object] | None = None) -> "Coalition":
        return cls(includes_platform=True, true_values=dict(buyers or {}))

    @classmethod
    def platform_seller(cls) -> "Coalition":
        return cls(includes_platform=True, includes_seller=True)

    @property
    def label(self) -> str:
        parts = []
        if self.includes_platform:
            parts.append("platform")
        if self.includes_seller:
            parts.append("seller")
        if self.true_values:
            parts.append(f"{len(self.true_values)} buyer(s)")
        return "+".join(parts)


def coalition_utility(
    outcome: Optional[AuctionOutcome],
    coalition: Coalition,
    strategic_ids: Iterable[int] = (),
    safe: bool = True,
) -> Fraction:
    """Utility of ``coalition`` for one realised outcome.

    ``strategic_ids`` are the identities the coalition bid under (members
    and any fakes); every other buyer identity counts as honest. Unsafe or
    aborted runs (``outcome is None``) are worth zero.
    """
    if outcome is None or not safe:
        return Fraction(0)
    ours = set(strategic_ids) | set(coalition.buyer_members)
    honest = [i for i in outcome.allocations if i not in ours]
    honest_x = sum(outcome.allocations[i] for i in honest)
    honest_p = sum((outcome.payments[i] for i in honest), Fraction(0))
    obtained = outcome.items_sold - honest_x
    values = sorted(coalition.true_values.values(), reverse=True)
    enjoyed = sum(values[: max(0, min(obtained, len(values)))], Fraction(0))
    mu = outcome.seller_revenue
    if coalition.includes_platform:
        if coalition.includes_seller:
            return honest_p + enjoyed
        return honest_p - mu + enjoyed
    own_p = sum((outcome.payments.get(i, Fraction(0)) for i in ours), Fraction(0))
    util = enjoyed - own_p
    if coalition.includes_seller:
        util += mu
    return util


def trace_utility(trace, coalition: Coalition, strategic_ids: Iterable[int] = ()) -> Fraction:
    """:func:`coalition_utility` for an :class:`~sealedbid.trace.ExecutionTrace`."""
    return coalition_utility(trace.outcome, coalition, strategic_ids, safe=trace.safe)


# -- strategy scripts ----------------------------------------------------------


class ScriptKind(enum.Enum):
    INPUT_REPLACE = "input-replace"
    INJECT_FAKE_BIDS = "inject-fake-bids"
    DROP_OUT = "drop-out"
    ABORT_AFTER_OUTCOME = "abort-after-outcome"
    PLATFORM_OUTCOME_MUTATION = "platform-outcome-mutation"
    PLATFORM_SIMULATE_WORLD = "platform-simulate-world"
    SELLER_SHILL_BIDS = "seller-shill-bids"
    CUSTOM = "custom"


FAKE_ID_BASE = 10_000


@dataclass(frozen=True)
class StrategyScript:
    """One deviation in the ideal model.

    ``replace`` maps coalition buyers to the bid they submit instead of their
    value (``None`` = no bid). ``fake_bids`` are extra bids under fresh
    identities. With ``abort_if_unprofitable`` the platform sees the
    strategic outcomes and answers ``⊥`` whenever the coalition would end up
    below zero. ``CUSTOM`` scripts supply ``hook(bids) -> bids``.
    """

    kind: ScriptKind
    replace: tuple[tuple[int, Optional[Fraction]], ...] = ()
    fake_bids: tuple[Fraction, ...] = ()
    abort_if_unprofitable: bool = False
    hook: Optional[Callable] = None
    label: str = ""

    def __str__(self):
        return self.label or self.kind.value

    def validate(self, coalition: Coalition) -> None:
        kind = self.kind
        if kind in (ScriptKind.PLATFORM_OUTCOME_MUTATION, ScriptKind.PLATFORM_SIMULATE_WORLD):
            if not coalition.includes_platform:
                raise InvalidScriptForCoalition(f"{kind.value} needs the platform")
            raise InvalidScriptForCoalition(
                f"{kind.value} is a real-world deviation; evaluate it with netproto.attacks"
            )
        if kind is ScriptKind.SELLER_SHILL_BIDS and not coalition.includes_seller:
            raise InvalidScriptForCoalition("shill bids need the seller")
        if (self.abort_if_unprofitable or kind is ScriptKind.ABORT_AFTER_OUTCOME) and not coalition.includes_platform:
            raise InvalidScriptForCoalition("only the platform can abort")
        for ident, _ in self.replace:
            if ident not in coalition.buyer_members:
                raise InvalidScriptForCoalition(f"identity {ident} is not a coalition member")
        if self.fake_bids and not (
            coalition.buyer_members or coalition.includes_platform or coalition.includes_seller
        ):
            raise InvalidScriptForCoalition("nobody to inject bids")

    @property
    def aborts(self) -> bool:
        return self.abort_if_unprofitable or self.kind is ScriptKind.ABORT_AFTER_OUTCOME

    def apply(self, coalition: Coalition) -> tuple[dict[int, Fraction], list[int]]:
        """Strategic bids and the identities the coalition controls."""
        bids = dict(coalition.true_values)
        for ident, b in self.replace:
            if b is None:
                bids.pop(ident, None)
            else:
                bids[ident] = b
        ids = list(coalition.buyer_members)
        for j, b in enumerate(self.fake_bids):
            bids[FAKE_ID_BASE + j] = b
            ids.append(FAKE_ID_BASE + j)
        if self.hook is not None:
            bids = dict(self.hook(bids))
            ids = sorted(set(ids) | (set(bids) - set(coalition.buyer_members)))
        return bids, ids


def input_replace(ident: int, bid) -> StrategyScript:
    b = to_rational(bid)
    return StrategyScript(ScriptKind.INPUT_REPLACE, replace=((ident, b),), label=f"replace {ident}->{b}")


def drop_out(ident: int) -> StrategyScript:
    return StrategyScript(ScriptKind.DROP_OUT, replace=((ident, None),), label=f"drop {ident}")


def inject(bids: Sequence, abort: bool = False, kind=ScriptKind.INJECT_FAKE_BIDS) -> StrategyScript:
    fakes = tuple(to_rational(b) for b in bids)
    tag = ",".join(str(b) for b in fakes)
    return StrategyScript(kind, fake_bids=fakes, abort_if_unprofitable=abort,
                          label=f"{kind.value} [{tag}]" + (" +abort" if abort else ""))


def standard_suite(domain: ValueDomain, coalition: Coalition) -> list[StrategyScript]:
    """Input replacements and single fake bids, one family at a time.

    With the platform in the coalition every script may also abort after
    seeing the strategic outcomes.
    """
    ticks = domain.ticks
    scripts: list[StrategyScript] = []
    members = sorted(coalition.buyer_members)
    if coalition.includes_platform:
        if coalition.includes_seller:
            scripts += [inject([b], abort=True, kind=ScriptKind.SELLER_SHILL_BIDS) for b in ticks]
        elif members:
            m = members[0]
            for b in ticks:
                scripts.append(StrategyScript(
                    ScriptKind.INPUT_REPLACE, replace=((m, b),), abort_if_unprofitable=True,
                    label=f"shade {m}->{b} +abort"))
            scripts.append(StrategyScript(ScriptKind.DROP_OUT, replace=((m, None),),
                                          abort_if_unprofitable=True, label=f"drop {m} +abort"))
            scripts += [inject([f], abort=True) for f in ticks]
        else:
            scripts += [inject([b], abort=True) for b in ticks]
        scripts.append(StrategyScript(ScriptKind.ABORT_AFTER_OUTCOME, label="abort-after-outcome"))
    elif coalition.includes_seller:
        scripts += [inject([b], kind=ScriptKind.SELLER_SHILL_BIDS) for b in ticks]
    else:
        (m,) = members
        scripts += [input_replace(m, b) for b in ticks]
        scripts.append(drop_out(m))
        scripts += [inject([b]) for b in ticks]
    return scripts


def sybil_suite(domain: ValueDomain, coalition: Coalition) -> list[StrategyScript]:
    """Replace a member's bid and add one fake bid in the same run.

    Outside :func:`standard_suite` on purpose: against second price with a
    tie-mixed payment, bidding the threshold from two identities can beat
    truthful bidding.
    """
    members = sorted(coalition.buyer_members)
    if not members:
        return []
    m = members[0]
    abort = coalition.includes_platform
    return [
        StrategyScript(ScriptKind.INJECT_FAKE_BIDS, replace=((m, b),), fake_bids=(f,),
                       abort_if_unprofitable=abort,
                       label=f"shade {m}->{b} fake {f}" + (" +abort" if abort else ""))
        for b in domain.ticks for f in domain.ticks
    ]


# -- evaluation ---------------------------------------------------------------


class Mode(enum.Enum):
    EXACT = "exact"
    MONTE_CARLO = "monte-carlo"


@dataclass
class UtilityReport:
    script: str
    honest_expected: Fraction
    deviating_expected: Fraction
    mode: Mode = Mode.EXACT
    samples: int = 0
    half_width: Fraction = Fraction(0)
    witness: Optional[dict] = None

    @property
    def violated(self) -> bool:
        return self.deviating_expected > self.honest_expected + self.half_width

    def to_json(self) -> dict:
        return {
            "script": self.script,
            "honest": str(self.honest_expected),
            "deviating": str(self.deviating_expected),
            "mode": self.mode.value,
            "samples": self.samples,
            "half_width": str(self.half_width),
            "violated": self.violated,
        }


def _run_utility(mechanism, coalition, honest, script, dist_cache=None) -> Fraction:
    """Exact expected coalition utility of one script against fixed honest bids."""
    if script is None:
        strat, ids = dict(coalition.true_values), list(coalition.buyer_members)
        aborts = False
    else:
        strat, ids = script.apply(coalition)
        aborts = script.aborts
    bids = dict(honest)
    bids.update(strat)
    total = Fraction(0)
    for w, out in mechanism.outcome_distribution(bids):
        u = coalition_utility(out, coalition, ids)
        if aborts and u < 0:
            u = Fraction(0)
        total += w * u
    return total


def _sample_utility(mechanism, coalition, honest, script, coin) -> Fraction:
    if script is None:
        strat, ids, aborts = dict(coalition.true_values), list(coalition.buyer_members), False
    else:
        strat, ids = script.apply(coalition)
        aborts = script.aborts
    bids = dict(honest)
    bids.update(strat)
    u = coalition_utility(mechanism.outcome(bids, coin), coalition, ids)
    return Fraction(0) if aborts and u < 0 else u


def check_ic(
    mechanism: Mechanism,
    coalition: Coalition,
    scripts: Iterable[StrategyScript],
    honest_values: Mapping[int, object] | None = None,
    *,
    dist: DiscreteDistribution | None = None,
    n_honest: int | None = None,
    mode: Mode = Mode.EXACT,
    samples: int = 2000,
    seed: int = 0,
    limit: int = 10**6,
) -> list[UtilityReport]:
    """Honest vs deviating expected coalition utility, one report per script.

    Ex post: pass ``honest_values``. Bayesian: pass ``dist`` and
    ``n_honest``; honest buyers ``1..n_honest`` then draw i.i.d. values.
    """
    scripts = list(scripts)
    for s in scripts:
        s.validate(coalition)
    if honest_values is not None:
        fixed = {int(i): to_rational(v) for i, v in honest_values.items()}
        clash = set(fixed) & coalition.buyer_members
        if clash:
            raise ValueError(f"identities {sorted(clash)} are both honest and strategic")
        profiles = [(Fraction(1), fixed)]
    elif dist is not None and n_honest is not None:
        profiles = None
    else:
        raise ValueError("need honest_values, or dist and n_honest")

    if mode is Mode.EXACT:
        if profiles is None:
            profiles = [(w, dict(enumerate(p, start=1))) for w, p in _profiles(dist, n_honest, limit)]
        reports = []
        baseline = [_run_utility(mechanism, coalition, prof, None) for _, prof in profiles]
        honest_u = sum((w * h for (w, _), h in zip(profiles, baseline)), Fraction(0))
        for s in scripts:
            dev = Fraction(0)
            worst = None
            for (w, prof), h in zip(profiles, baseline):
                d = _run_utility(mechanism, coalition, prof, s)
                dev += w * d
                if worst is None and d > h:
                    worst = {str(i): str(v) for i, v in prof.items()}
            reports.append(UtilityReport(str(s), honest_u, dev, Mode.EXACT, witness=worst))
        return reports

    rng = random.Random(seed)
    draws = []
    for _ in range(samples):
        if profiles is not None:
            prof = profiles[0][1]
        else:
            ticks, weights = zip(*dist.support())
            vals = rng.choices(ticks, weights=[float(w) for w in weights], k=n_honest)
            prof = dict(enumerate(vals, start=1))
        draws.append((prof, rng.randbytes(32)))
    honest_samples = [_sample_utility(mechanism, coalition, prof, None, coin) for prof, coin in draws]
    honest_mean = sum(honest_samples, Fraction(0)) / samples
    reports = []
    for s in scripts:
        dev = [_sample_utility(mechanism, coalition, prof, s, coin) for prof, coin in draws]
        diffs = [float(d - h) for d, h in zip(dev, honest_samples)]
        mean = sum(diffs) / samples
        var = sum((x - mean) ** 2 for x in diffs) / max(1, samples - 1)
        hw = Fraction(Z99 * math.sqrt(var / samples)).limit_denominator(10**12)
        reports.append(UtilityReport(str(s), honest_mean, sum(dev, Fraction(0)) / samples,
                                     Mode.MONTE_CARLO, samples, hw))
    return reports


# -- Myerson checks -----------------------------------------------------------


@dataclass
class MyersonReport:
    checked: int = 0
    violation: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return self.violation is None


def _curve_violation(ticks, xs, ps):
    for a, b in itertools.combinations(range(len(ticks)), 2):
        lo, hi = ticks[a], ticks[b]
        dx = xs[b] - xs[a]
        dp = ps[b] - ps[a]
        if dx < 0:
            return {"kind": "monotonicity", "b": str(lo), "b'": str(hi), "x(b)": str(xs[a]), "x(b')": str(xs[b])}
        if not (lo * dx <= dp <= hi * dx):
            return {"kind": "sandwich", "b": str(lo), "b'": str(hi), "dx": str(dx), "dp": str(dp)}
    return None


def myerson_check(
    mechanism: Mechanism,
    n: int,
    dist: DiscreteDistribution | None = None,
    limit: int = 10**6,
) -> MyersonReport:
    """Monotone allocation and payment sandwich for every buyer.

    Ex post (default): every opposing bid vector over the mechanism's domain.
    Bayesian (``dist`` given): expectations over opposing bids drawn from
    ``dist``. Allocation and payment are exact expectations over coins.
    """
    domain = mechanism.domain
    ticks = domain.ticks
    report = MyersonReport()
    if len(ticks) ** n > limit:
        raise EnumerationTooLarge(f"{len(ticks)}^{n} profiles exceed {limit}")
    for i in range(1, n + 1):
        others_ids = [j for j in range(1, n + 1) if j != i]
        if dist is None:
            weighted = [(Fraction(1), dict(zip(others_ids, combo)))
                        for combo in itertools.product(ticks, repeat=n - 1)]
            curves = []
            for _, others in weighted:
                xs, ps = _own_curve(mechanism, i, others, ticks)
                curves.append((others, xs, ps))
        else:
            xs = [Fraction(0)] * len(ticks)
            ps = [Fraction(0)] * len(ticks)
            for w, prof in _profiles(dist, n - 1, limit):
                others = dict(zip(others_ids, prof))
                cx, cp = _own_curve(mechanism, i, others, ticks)
                xs = [a + w * b for a, b in zip(xs, cx)]
                ps = [a + w * b for a, b in zip(ps, cp)]
            curves = [("bayesian", xs, ps)]
        for others, xs, ps in curves:
            report.checked += 1
            bad = _curve_violation(ticks, xs, ps)
            if bad:
                bad["buyer"] = i
                bad["others"] = others if isinstance(others, str) else {str(k): str(v) for k, v in others.items()}
                report.violation = bad
                return report
    return report


def _own_curve(mechanism, i, others, ticks):
    xs, ps = [], []
    for t in ticks:
        bids = dict(others)
        bids[i] = t
        e = _expected(mechanism, bids)
        xs.append(e.x[i])
        ps.append(e.p[i])
    return xs, ps


def revenue_tick_lemma_check(x_fn, p_fn, mu_fn, domain: ValueDomain) -> dict:
    """Check the revenue-tick bound ``mu(b') - mu(b) <= tick * |x(b') - x(b)|``.

    The hypotheses (monotone ``x``, payment sandwich, and
    ``mu(b') - mu(b) <= p(b') - p(b) - b (x(b') - x(b))``) are verified first
    over every ordered pair; a failing hypothesis raises
    :class:`HypothesisViolated` with the offending pair.
    """
    ticks = domain.ticks
    gap = domain.tick()
    xs = [Fraction(x_fn(t)) for t in ticks]
    ps = [Fraction(p_fn(t)) for t in ticks]
    mus = [Fraction(mu_fn(t)) for t in ticks]
    bad = _curve_violation(ticks, xs, ps)
    if bad:
        raise HypothesisViolated("allocation/payment hypothesis fails", bad)
    for a, b in itertools.permutations(range(len(ticks)), 2):
        lo = ticks[a]
        if mus[b] - mus[a] > ps[b] - ps[a] - lo * (xs[b] - xs[a]):
            raise HypothesisViolated("revenue hypothesis fails", {"b": str(ticks[a]), "b'": str(ticks[b])})
    tight = []
    for a, b in itertools.permutations(range(len(ticks)), 2):
        lhs = mus[b] - mus[a]
        rhs = gap * abs(xs[b] - xs[a])
        if lhs > rhs:
            return {"ok": False, "witness": (str(ticks[a]), str(ticks[b]))}
        if lhs == rhs and lhs != 0:
            tight.append((str(ticks[a]), str(ticks[b])))
    return {"ok": True, "tight_pairs": tight}


# -- revenue checks ------------------------------------------------------------


def revenue_bound(domain: ValueDomain, k: int, n: int) -> float:
    return float(domain.tick()) * k * (math.log(n) + 3)


@dataclass
class PlatformRevenueReport:
    expected: Fraction
    bound: float
    exact: bool
    samples: int = 0

    @property
    def within(self) -> bool:
        return float(self.expected) <= self.bound


def platform_revenue_bound(
    mechanism: Mechanism,
    dist: DiscreteDistribution,
    n: int,
    samples: int = 0,
    seed: int = 0,
    limit: int = 10**6,
) -> PlatformRevenueReport:
    """Expected platform revenue under ``dist^n`` versus ``tick * k * (ln n + 3)``.

    Exact whenever the profile space fits in ``limit`` and ``samples`` is 0;
    seeded Monte Carlo otherwise.
    """
    bound = revenue_bound(mechanism.domain, mechanism.k, n)
    if samples == 0:
        total = Fraction(0)
        for w, prof in _profiles(dist, n, limit):
            total += w * _expected(mechanism, dict(enumerate(prof, start=1))).platform_revenue
        return PlatformRevenueReport(total, bound, True)
    rng = random.Random(seed)
    ticks, weights = zip(*dist.support())
    fw = [float(w) for w in weights]
    acc = Fraction(0)
    for _ in range(samples):
        prof = rng.choices(ticks, weights=fw, k=n)
        acc += mechanism.outcome(dict(enumerate(prof, start=1)), rng.randbytes(32)).platform_revenue
    return PlatformRevenueReport(acc / samples, bound, False, samples)


def optimal_virtual_surplus(dist: DiscreteDistribution, k: int, values: Sequence[Fraction]) -> Fraction:
    """Largest achievable ``sum x_i phi(v_i)`` with at most ``k`` winners."""
    phis = sorted((dist.phi(v) for v in values), reverse=True)
    return sum((p for p in phis[:k] if p > 0), Fraction(0))


@dataclass
class RevenueRow:
    values: tuple[Fraction, ...]
    weight: Fraction
    ascending: Fraction
    second_price: Fraction
    optimal: Fraction

    @property
    def gap(self) -> Fraction:
        return abs(self.ascending - self.second_price)


@dataclass
class RevenueTable:
    rows: list[RevenueRow]
    k: int
    tick: Fraction
    exact: bool

    def expected(self, column: str) -> Fraction:
        total = sum((r.weight * getattr(r, column) for r in self.rows), Fraction(0))
        if self.exact:
            return total
        return total / sum((r.weight for r in self.rows), Fraction(0))

    def worst_gap(self) -> Fraction:
        return max((r.gap for r in self.rows), default=Fraction(0))

    def rows_over_bound(self) -> list[RevenueRow]:
        return [r for r in self.rows if r.gap > self.k * self.tick]

    def to_csv(self) -> str:
        lines = ["values,weight,ascending,second_price,optimal,gap"]
        for r in self.rows:
            vals = " ".join(str(v) for v in r.values)
            lines.append(f"{vals},{r.weight},{r.ascending},{r.second_price},{r.optimal},{r.gap}")
        return "\n".join(lines) + "\n"


def revenue_compare(
    dist: DiscreteDistribution,
    k: int,
    n: int,
    samples: int = 0,
    seed: int = 0,
    reserve=None,
    limit: int = 10**6,
) -> RevenueTable:
    """Per value vector: ascending, second-price and virtual-surplus revenue.

    Enumerates ``dist^n`` exactly when ``samples`` is 0 (profiles weighted by
    probability), otherwise draws ``samples`` seeded vectors with weight 1.
    """
    from .mechanism import AscendingAuction, SecondPriceAuction

    domain = dist.domain
    r = dist.reserve() if reserve is None else to_rational(reserve)
    asc = AscendingAuction(domain, r, k)
    sp = SecondPriceAuction(domain, r, k)
    if samples == 0:
        profiles = list(_profiles(dist, n, limit))
    else:
        rng = random.Random(seed)
        ticks, weights = zip(*dist.support())
        fw = [float(w) for w in weights]
        profiles = [(Fraction(1), tuple(rng.choices(ticks, weights=fw, k=n))) for _ in range(samples)]
    rows = []
    for w, prof in profiles:
        bids = dict(enumerate(prof, start=1))
        rows.append(RevenueRow(
            tuple(prof), w,
            asc.expected(bids).revenue,
            sp.expected(bids).revenue,
            optimal_virtual_surplus(dist, k, prof),
        ))
    return RevenueTable(rows, k, domain.tick(), samples == 0)
