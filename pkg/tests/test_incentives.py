"""Coalition utilities, the IC harness, Myerson checks and revenue bounds."""

import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sealedbid.controls import FirstPriceAuction, TickSkimmingAuction
from sealedbid.domain import DiscreteDistribution, ValueDomain
from sealedbid.incentives import (
    Coalition,
    HypothesisViolated,
    InvalidScriptForCoalition,
    Mode,
    ScriptKind,
    StrategyScript,
    check_ic,
    coalition_utility,
    drop_out,
    input_replace,
    inject,
    myerson_check,
    platform_revenue_bound,
    revenue_compare,
    revenue_tick_lemma_check,
    standard_suite,
    sybil_suite,
)
from sealedbid.mechanism import AscendingAuction, SecondPriceAuction
from sealedbid.outcome import AuctionOutcome

TENTHS = ValueDomain.grid(11)
HALVES = ValueDomain.grid(3)


def outcome(alloc, pay, mu=None):
    pay = {i: F(p) for i, p in pay.items()}
    total = sum(pay.values(), F(0))
    mu = total if mu is None else F(mu)
    return AuctionOutcome(alloc, pay, sum(alloc.values()), mu, total - mu)


# -- coalition utility --------------------------------------------------------------


def test_unsafe_trace_is_worth_nothing():
    out = outcome({1: 1}, {1: "7/20"})
    for c in (Coalition.platform(), Coalition.platform_seller(), Coalition.platform({2: "0.6"})):
        assert coalition_utility(out, c, safe=False) == 0
        assert coalition_utility(None, c) == 0


def test_platform_with_two_buyers():
    """t = 2, honest buyer 1 wins paying 0.35, mu_S = 0.7: 0.35 - 0.7 + 0.6."""
    out = outcome({1: 1, 2: 1, 3: 0}, {1: "0.35", 2: "0.35", 3: 0})
    c = Coalition.platform({2: "0.6", 3: "0.3"})
    assert coalition_utility(out, c) == F(1, 4)


def test_platform_seller_collects_honest_payments():
    out = outcome({1: 1, 2: 1}, {1: "0.35", 2: "0.2"})
    assert coalition_utility(out, Coalition.platform_seller()) == F(11, 20)


def test_single_buyer_and_seller():
    out = outcome({1: 1, 2: 0}, {1: "0.35", 2: 0})
    assert coalition_utility(out, Coalition.buyer(1, "0.5")) == F(3, 20)
    assert coalition_utility(out, Coalition.buyer(2, "0.3")) == 0
    assert coalition_utility(out, Coalition.seller()) == F(7, 20)


def test_fake_identity_wins_count_for_buyer():
    out = outcome({1: 0, 2: 0, 50: 1}, {1: 0, 2: 0, 50: "0.5"})
    assert coalition_utility(out, Coalition.buyer(2, "1"), strategic_ids=[2, 50]) == F(1, 2)


def test_coalition_shapes():
    with pytest.raises(ValueError):
        Coalition(true_values={1: "0.5", 2: "0.5"})
    with pytest.raises(ValueError):
        Coalition.buyer(0, "0.5")
    with pytest.raises(ValueError):
        Coalition()
    assert Coalition.platform({1: "0.5"}).label == "platform+1 buyer(s)"


# -- check_ic ------------------------------------------------------------------


def sp(reserve="0.2", k=1, domain=TENTHS):
    return SecondPriceAuction(domain, F(reserve), k)


@pytest.mark.parametrize("bid, deviating", [("0.4", F(3, 20)), ("0.2", F(0)), ("1", F(3, 20))])
def test_input_replace_examples(bid, deviating):
    """True value 0.5 against a bid of 0.3 earns 0.15 honestly."""
    (rep,) = check_ic(sp(), Coalition.buyer(2, "0.5"), [input_replace(2, bid)], {1: "0.3"})
    assert rep.honest_expected == F(3, 20)
    assert rep.deviating_expected == deviating
    assert not rep.violated


def test_script_validation():
    buyer = Coalition.buyer(2, "0.5")
    with pytest.raises(InvalidScriptForCoalition):
        check_ic(sp(), buyer, [StrategyScript(ScriptKind.PLATFORM_OUTCOME_MUTATION)], {1: "0.3"})
    with pytest.raises(InvalidScriptForCoalition):
        check_ic(sp(), buyer, [inject(["0.5"], abort=True)], {1: "0.3"})
    with pytest.raises(InvalidScriptForCoalition):
        check_ic(sp(), buyer, [input_replace(3, "0.5")], {1: "0.3"})
    with pytest.raises(InvalidScriptForCoalition):
        check_ic(sp(), buyer, [inject(["0.5"], kind=ScriptKind.SELLER_SHILL_BIDS)], {1: "0.3"})


def test_empty_script_set():
    assert check_ic(sp(), Coalition.buyer(2, "0.5"), [], {1: "0.3"}) == []


def test_drop_out_and_fake_bid():
    """A fake 0.4 only lifts the winner's own price to 0.4/2 + 0.5/2."""
    buyer = Coalition.buyer(2, "0.5")
    reps = check_ic(sp(), buyer, [drop_out(2), inject(["0.4"])], {1: "0.3"})
    assert [r.deviating_expected for r in reps] == [0, F(1, 20)]
    assert not any(r.violated for r in reps)


def test_seller_shill_pays_off_ex_post():
    """Knowing the lone bid is 0.5, a shill at 0.5 lifts the price from the
    reserve to 0.5 on half the coins: 1/4 against 1/5. Seller incentives
    are therefore only checked in expectation over the buyers' values."""
    seller = Coalition.seller()
    (rep,) = check_ic(sp(), seller, [inject(["0.5"], kind=ScriptKind.SELLER_SHILL_BIDS)], {1: "0.5"})
    assert (rep.honest_expected, rep.deviating_expected) == (F(1, 5), F(1, 4))
    assert rep.violated


@pytest.mark.parametrize("n_honest", [1, 2, 3])
def test_seller_shill_bayesian(n_honest):
    d = ValueDomain.grid(5)
    dist = DiscreteDistribution.uniform(d)
    mech = SecondPriceAuction.for_distribution(dist, 1)
    for c in (Coalition.seller(), Coalition.platform_seller()):
        reps = check_ic(mech, c, standard_suite(d, c), dist=dist, n_honest=n_honest)
        assert not any(r.violated for r in reps)


def test_standard_suite_clean_small_sweep():
    """Buyer and platform coalitions on the 5-tick grid, n = 3, ex post."""
    d = ValueDomain.grid(5)
    mech = SecondPriceAuction(d, F(1, 2), 1)
    for v in d.ticks:
        for c in (Coalition.buyer(3, v), Coalition.platform({3: v})):
            for prof in itertools.product(d.ticks, repeat=2):
                reps = check_ic(mech, c, standard_suite(d, c), dict(enumerate(prof, 1)))
                assert not any(r.violated for r in reps)
    for c in (Coalition.platform(),):
        for prof in itertools.product(d.ticks, repeat=2):
            reps = check_ic(mech, c, standard_suite(d, c), dict(enumerate(prof, 1)))
            assert not any(r.violated for r in reps)


def test_first_price_rewards_shading():
    mech = FirstPriceAuction(HALVES, F(0), 1)
    (rep,) = check_ic(mech, Coalition.buyer(2, "1"), [input_replace(2, "1/2")], {1: "0"})
    assert rep.honest_expected == 0
    assert rep.deviating_expected == F(1, 2)
    assert rep.violated


def test_sybil_tie_flooding_ex_post():
    """Value 1 against one bid of 1/2, reserve 1/2: truthful pays 3/4; two
    identities at 1/2 win 2/3 of the time at price 1/2."""
    c = Coalition.buyer(2, "1")
    reps = check_ic(sp("1/2", domain=HALVES), c, sybil_suite(HALVES, c), {1: "1/2"})
    bad = [r for r in reps if r.violated]
    assert [r.script for r in bad] == ["shade 2->1/2 fake 1/2"]
    assert (bad[0].honest_expected, bad[0].deviating_expected) == (F(1, 4), F(1, 3))


def test_sybil_tie_flooding_bayesian():
    c = Coalition.buyer(2, "1")
    dist = DiscreteDistribution.uniform(HALVES)
    reps = check_ic(sp("1/2", domain=HALVES), c, sybil_suite(HALVES, c), dist=dist, n_honest=1)
    bad = [r for r in reps if r.violated]
    assert [(r.honest_expected, r.deviating_expected) for r in bad] == [(F(1, 4), F(5, 18))]


def test_sybil_also_helps_platform_buyer():
    c = Coalition.platform({2: "1"})
    reps = check_ic(sp("1/2", domain=HALVES), c, sybil_suite(HALVES, c), {1: "1/2"})
    assert any(r.violated for r in reps)


def test_bayesian_exact_clean():
    d = ValueDomain.grid(4)
    dist = DiscreteDistribution(d, ("2/5", "3/10", "1/5", "1/10"))
    assert dist.is_regular()
    mech = SecondPriceAuction.for_distribution(dist, 1)
    for c in (Coalition.platform_seller(), Coalition.seller(), Coalition.buyer(3, "2/3")):
        reps = check_ic(mech, c, standard_suite(d, c), dist=dist, n_honest=2)
        assert not any(r.violated for r in reps)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_monte_carlo_agrees_with_exact(seed):
    d = ValueDomain.grid(4)
    dist = DiscreteDistribution.uniform(d)
    mech = SecondPriceAuction(d, F(1, 3), 1)
    c = Coalition.buyer(3, "2/3")
    scripts = [input_replace(3, "1/3"), inject(["1"])]
    exact = check_ic(mech, c, scripts, dist=dist, n_honest=2)
    mc = check_ic(mech, c, scripts, dist=dist, n_honest=2, mode=Mode.MONTE_CARLO, samples=4000, seed=seed)
    for e, m in zip(exact, mc):
        gap = (e.deviating_expected - e.honest_expected) - (m.deviating_expected - m.honest_expected)
        assert abs(gap) <= m.half_width * 2
        assert m.samples == 4000


# -- Myerson -------------------------------------------------------------------


def test_myerson_example_pair():
    from sealedbid.mechanism import own_bid_curve

    x, p = own_bid_curve(sp(), 2, {1: F(3, 10)})
    assert (x(F(1, 5)), p(F(1, 5))) == (0, 0)
    assert (x(F(2, 5)), p(F(2, 5))) == (1, F(7, 20))
    assert F(1, 5) <= p(F(2, 5)) - p(F(1, 5)) <= F(2, 5)


@pytest.mark.parametrize("size, n", [(3, 3), (4, 3), (5, 2)])
def test_myerson_second_price(size, n):
    d = ValueDomain.grid(size)
    for reserve, k in itertools.product(d.ticks, (1, 2)):
        rep = myerson_check(SecondPriceAuction(d, reserve, k), n)
        assert rep.ok, rep.violation
        assert rep.checked == n * size ** (n - 1)


def test_myerson_bayesian():
    dist = DiscreteDistribution(ValueDomain.grid(4), ("2/5", "3/10", "1/5", "1/10"))
    assert myerson_check(SecondPriceAuction.for_distribution(dist, 1), 3, dist=dist).ok


def test_posted_price_constant_segment():
    """One buyer, reserve 1/2 on the quarter grid: below 1/2 nothing moves."""
    mech = SecondPriceAuction(ValueDomain.grid(5), F(1, 2), 1)
    assert myerson_check(mech, 1).ok


def test_first_price_breaks_sandwich():
    rep = myerson_check(FirstPriceAuction(HALVES, F(0), 1), 2)
    assert not rep.ok
    assert rep.violation["kind"] == "sandwich"


# -- revenue ---------------------------------------------------------------------


def test_platform_revenue_zero_for_shipped_mechanisms():
    for dist in (DiscreteDistribution.uniform(TENTHS), DiscreteDistribution.uniform(HALVES)):
        for cls in (SecondPriceAuction, AscendingAuction):
            for k in (1, 2):
                rep = platform_revenue_bound(cls.for_distribution(dist, k), dist, 3)
                assert rep.exact and rep.expected == 0


def test_tick_skimming_fixture():
    """Every sale has price >= 1/2, so the skim is 1/20 whenever someone bids
    at least the reserve: 1/20 * (1 - (5/11)^4)."""
    dist = DiscreteDistribution.uniform(TENTHS)
    rep = platform_revenue_bound(TickSkimmingAuction(TENTHS, F(1, 2), 1), dist, 4)
    assert rep.expected == F(1, 20) * (1 - F(5, 11) ** 4)
    assert rep.expected <= F(1, 20)
    assert rep.within


def test_sampled_platform_revenue():
    dist = DiscreteDistribution.uniform(TENTHS)
    rep = platform_revenue_bound(SecondPriceAuction(TENTHS, F(1, 2), 2), dist, 6, samples=300, seed=4)
    assert not rep.exact and rep.expected == 0


def test_revenue_single_buyer_halves():
    tab = revenue_compare(DiscreteDistribution.uniform(HALVES), 1, 1)
    assert tab.expected("optimal") == F(1, 3)
    assert tab.expected("second_price") == F(1, 3)


def test_revenue_row_with_three_values():
    dist = DiscreteDistribution.uniform(TENTHS)
    asc = AscendingAuction(TENTHS, F(1, 5), 1).expected({1: "0.7", 2: "0.4", 3: "0.4"})
    spr = SecondPriceAuction(TENTHS, F(1, 5), 1).expected({1: "0.7", 2: "0.4", 3: "0.4"})
    assert asc.revenue == F(2, 5)
    assert spr.revenue == F(7, 15)
    assert abs(asc.revenue - spr.revenue) <= TENTHS.tick()
    tab = revenue_compare(dist, 1, 1, reserve="0.2")
    assert len(tab.rows) == 11


def test_revenue_all_zero_values():
    dist = DiscreteDistribution(TENTHS, ("1",) + ("0",) * 10)
    tab = revenue_compare(dist, 1, 3, reserve="0.2")
    assert [(r.ascending, r.second_price) for r in tab.rows] == [(0, 0)]
    assert tab.to_csv().splitlines()[0] == "values,weight,ascending,second_price,optimal,gap"


def test_revenue_tick_lemma_single_buyer():
    from sealedbid.mechanism import own_bid_curve

    x, p = own_bid_curve(SecondPriceAuction(HALVES, F(1, 2), 1), 1, {})
    assert revenue_tick_lemma_check(x, p, lambda t: 0, HALVES) == {"ok": True, "tight_pairs": []}


def curve(values):
    table = dict(zip(HALVES.ticks, (F(v) for v in values)))
    return table.__getitem__


def test_revenue_tick_lemma_tight():
    """x = (0,1,1), p = (0,1/2,1/2), mu = (0,1/2,1/2): equality at 0 -> 1/2."""
    rep = revenue_tick_lemma_check(curve([0, 1, 1]), curve([0, "1/2", "1/2"]), curve([0, "1/2", "1/2"]), HALVES)
    assert rep["ok"]
    assert ("0", "1/2") in rep["tight_pairs"]


def test_revenue_tick_lemma_double_jump():
    with pytest.raises(HypothesisViolated) as err:
        revenue_tick_lemma_check(curve([0, 1, 1]), curve([0, "1/2", "1/2"]), curve([0, 1, 1]), HALVES)
    assert err.value.witness == {"b": "0", "b'": "1/2"}
