"""Honest executions of the compiled protocol against the ideal functionality."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping

from ..mechanism import run_ideal_auction
from .network import ConfigInvalid, ProtocolConfig
from .protocol import run_protocol


@dataclass
class EquivalenceReport:
    trials: int = 0
    mismatches: list[int] = field(default_factory=list)
    unsafe: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches and not self.unsafe


def coupled_run(config: ProtocolConfig, honest_values: Mapping[int, object]):
    """One real run and the ideal run on the same joint coin.

    Returns ``(trace, ideal_outcome)``.
    """
    trace = run_protocol(config, honest_values)
    ideal = run_ideal_auction(config.rules(), honest_values, coin=trace.coin)
    return trace, ideal.outcome


def honest_equivalence(config: ProtocolConfig, honest_values: Mapping[int, object],
                       trials: int) -> EquivalenceReport:
    """Couple ``trials`` real/ideal runs with seeds ``config.seed + t``."""
    report = EquivalenceReport()
    for t in range(trials):
        trace, ideal = coupled_run(replace(config, seed=config.seed + t), honest_values)
        report.trials += 1
        if not trace.safe:
            report.unsafe.append(t)
        if trace.outcome is None or trace.outcome.dumps() != ideal.dumps():
            report.mismatches.append(t)
    return report


def outcome_marginals(config: ProtocolConfig, honest_values: Mapping[int, object]):
    """Exact outcome distributions of both worlds over every platform coin.

    Only sensible for a reduced coin length; the honest buyers' coins are
    held fixed, which is enough because one uniform contributor makes the
    XOR uniform. Returns ``(real, ideal)`` as ``{outcome_json: probability}``.
    """
    if config.lambda_bits > 16:
        raise ConfigInvalid("exact enumeration needs lambda_bits <= 16")
    space = 1 << config.lambda_bits
    real: Counter = Counter()
    ideal: Counter = Counter()
    rules = config.rules()
    for c in range(space):
        coin = c.to_bytes(config.coin_bytes, "big")
        trace = run_protocol(replace(config, platform_coin=coin), honest_values)
        real[trace.outcome.dumps() if trace.safe else None] += 1
        ideal[run_ideal_auction(rules, honest_values, coin=coin).outcome.dumps()] += 1
    return ({k: Fraction(v, space) for k, v in real.items()},
            {k: Fraction(v, space) for k, v in ideal.items()})
