"""The compiled protocol: honest runs, attacks, coin handling and traces."""

import itertools
import random
from collections import Counter
from dataclasses import replace
from fractions import Fraction as F

import pytest

from sealedbid.domain import ValueDomain
from sealedbid.mechanism import run_ideal_auction
from sealedbid.netproto import (
    Adversary,
    ConfigInvalid,
    IdentityHijack,
    LengthMismatch,
    ProtocolConfig,
    attack_by_name,
    attack_suite,
    coupled_run,
    honest_equivalence,
    outcome_marginals,
    run_protocol,
    xor_coin,
)
from sealedbid.trace import read_jsonl

TENTHS = ValueDomain.grid(11)
BASE = ProtocolConfig(TENTHS, 1, reserve=F(1, 5))
HONEST = {1: F(1, 2), 2: F(3, 10)}


def test_honest_run_matches_rules():
    trace = run_protocol(BASE, HONEST)
    assert trace.safe
    assert not trace.forced
    assert trace.outcome.payments[1] == F(7, 20)
    assert trace.outcome.allocations == {1: 1, 2: 0}
    ideal = run_ideal_auction(BASE.rules(), HONEST, coin=trace.coin).outcome
    assert trace.outcome == ideal
    assert len(trace.coin) == BASE.coin_bytes
    assert trace.blockchain.read()


def test_honest_run_ascending():
    cfg = replace(BASE, mechanism="ascending")
    trace, ideal = coupled_run(cfg, HONEST)
    assert trace.safe and trace.outcome == ideal
    # buyer 2 leaves once the clock reaches its value
    assert trace.outcome.payments[1] == F(3, 10)


def test_no_buyers():
    trace = run_protocol(BASE, {})
    assert trace.safe
    assert trace.outcome.winners == []
    assert trace.outcome.seller_revenue == 0


def test_private_outcomes_delivered():
    trace = run_protocol(BASE, HONEST)
    for i in HONEST:
        assert trace.private_outcomes[i] == trace.outcome.private(i)


def test_seed_determinism():
    a = run_protocol(BASE, HONEST).to_jsonl(full=True)
    b = run_protocol(BASE, HONEST).to_jsonl(full=True)
    c = run_protocol(replace(BASE, seed=1), HONEST).to_jsonl(full=True)
    assert a == b != c


def test_withheld_opening_is_forced():
    adv = attack_by_name(BASE, "withhold-opening").build(HONEST, random.Random(0))
    trace = run_protocol(BASE, HONEST, adv)
    assert trace.safe
    assert trace.forced == [adv.ident]
    assert trace.bids[adv.ident] == adv.value
    ideal = run_ideal_auction(BASE.rules(), {**HONEST, adv.ident: adv.value}, coin=trace.coin).outcome
    assert trace.outcome == ideal


def test_mutated_outcome_is_caught():
    adv = attack_by_name(BASE, "mutate-outcome").build(HONEST, random.Random(0))
    trace = run_protocol(BASE, HONEST, adv)
    assert not trace.safe
    assert any(not trace.accepted(i) for i in HONEST)


@pytest.mark.parametrize("mechanism", ["second-price", "ascending"])
@pytest.mark.parametrize("case", [c.name for c in attack_suite(BASE)])
def test_attack_suite_expectations(case, mechanism):
    cfg = replace(BASE, mechanism=mechanism)
    attack = attack_by_name(cfg, case)
    for seed in range(3):
        honest = {1: F(7, 10), 2: F(2, 5), 3: F(1, 5)}
        adv = attack.build(honest, random.Random(seed))
        trace = run_protocol(replace(cfg, seed=seed), honest, adv)
        assert trace.safe == attack.expect_safe, trace.notes
        if trace.safe:
            assert not trace.outcome.violations()


def test_suite_names_unique():
    names = [c.name for c in attack_suite(BASE)]
    assert len(names) == len(set(names)) == 13


def test_unknown_attack():
    with pytest.raises(KeyError):
        attack_by_name(BASE, "nope")


def test_equivalence_report():
    report = honest_equivalence(BASE, {1: "0.9", 2: "0.9", 3: "0.1"}, 5)
    assert report.ok and report.trials == 5


def test_tie_marginals_exact():
    cfg = replace(BASE, lambda_bits=8)
    real, ideal = outcome_marginals(cfg, {1: "0.4", 2: "0.4"})
    assert real == ideal
    assert sorted(real.values()) == [F(1, 2), F(1, 2)]


def test_marginals_need_short_coins():
    with pytest.raises(ConfigInvalid):
        outcome_marginals(BASE, HONEST)


def test_xor_coin_examples():
    assert xor_coin([b"\x0f", b"\xf0"]) == b"\xff"
    assert xor_coin([b"\xaa\x01", b"\xaa\x01"]) == b"\x00\x00"
    with pytest.raises(LengthMismatch):
        xor_coin([b"\x00", b"\x00\x00"])


def test_xor_uniform_with_one_uniform_share():
    """A fixed share XOR a uniform byte hits every byte exactly once."""
    for fixed in (0, 0x5A, 0xFF):
        counts = Counter(xor_coin([bytes([fixed]), bytes([u])]) for u in range(256))
        assert len(counts) == 256 and set(counts.values()) == {1}
    pairs = Counter(xor_coin([bytes([a]), bytes([b])]) for a, b in itertools.product(range(256), repeat=2))
    assert set(pairs.values()) == {256}


def test_platform_coin_is_used():
    coin = bytes(BASE.coin_bytes)
    t1 = run_protocol(replace(BASE, platform_coin=coin), HONEST)
    t2 = run_protocol(replace(BASE, platform_coin=bytes([1]) + coin[1:]), HONEST)
    assert t1.coin != t2.coin
    assert t1.coin[1:] == t2.coin[1:]


def test_jsonl_roundtrip():
    trace = run_protocol(BASE, HONEST)
    records, trailer = read_jsonl(trace.to_jsonl())
    assert len(records) == len(trace.messages)
    assert trailer["safe"] is True
    assert trailer["outcome"] == trace.outcome.to_json()
    assert records[0]["step"].startswith("a")
    full, _ = read_jsonl(trace.to_jsonl(full=True))
    assert len(full) == len(records)
    assert any(set(f) - set(r) for f, r in zip(full, records))
    with pytest.raises(ValueError):
        read_jsonl(trace.to_jsonl().rsplit("\n", 2)[0])


@pytest.mark.parametrize("kwargs", [
    {"k": 0},
    {"mechanism": "dutch"},
    {"lambda_bits": 12},
    {"kappa": 0},
    {"nitc_T": 0},
    {"deadlines": (1, 2, 3, 4)},
    {"reserve": F(1, 3)},
    {"reserve": None},
    {"platform_coin": b"\x00"},
])
def test_config_invalid(kwargs):
    base = {"domain": TENTHS, "k": 1, "reserve": F(1, 5)}
    with pytest.raises(ConfigInvalid):
        ProtocolConfig(**{**base, **kwargs})


def test_bad_honest_values():
    with pytest.raises(ConfigInvalid):
        run_protocol(BASE, {0: "0.5"})
    with pytest.raises(ConfigInvalid):
        run_protocol(BASE, {1: "0.55"})


def test_identity_hijack():
    class Hijack(Adversary):
        corrupted = frozenset({1})

        def buyers(self):
            return {1: F(9, 10)}

    with pytest.raises(IdentityHijack):
        run_protocol(BASE, HONEST, Hijack())


def test_honest_base_adversary_changes_nothing():
    assert run_protocol(BASE, HONEST, Adversary()).to_jsonl(True) == run_protocol(BASE, HONEST).to_jsonl(True)
