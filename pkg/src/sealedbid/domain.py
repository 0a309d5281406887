"""Discrete value domains, priors and the Myerson quantities derived from them.

Everything here is exact: ticks, probabilities and virtual values are
:class:`fractions.Fraction` instances so that incentive checks done by
enumeration never see floating point noise.
"""

from __future__ import annotations

import json
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence, Union

RationalLike = Union[Fraction, int, str]


class DomainError(ValueError):
    """Malformed domain or distribution."""


class NotATick(DomainError):
    pass


class NoSuccessor(DomainError):
    pass


class ZeroDensity(ArithmeticError):
    """Virtual value requested at a non-top tick with zero probability mass."""


def to_rational(value: RationalLike) -> Fraction:
    """Parse ``value`` exactly.

    Strings may be ``"p/q"`` or decimals; ``Fraction("0.35")`` already gives
    ``7/20`` so decimals keep their power-of-ten denominator. Floats are
    rejected because their binary expansion is almost never what the caller
    meant.
    """
    if isinstance(value, float):
        raise TypeError(f"refusing float {value!r}; pass a string or Fraction")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str)):
        return Fraction(value.strip() if isinstance(value, str) else value)
    raise TypeError(f"cannot interpret {value!r} as a rational")


def format_rational(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class ValueDomain:
    """Ordered ticks ``0 = t_1 < t_2 < ... < t_T <= 1``."""

    ticks: tuple[Fraction, ...]

    def __post_init__(self):
        ticks = tuple(to_rational(t) for t in self.ticks)
        object.__setattr__(self, "ticks", ticks)
        if len(ticks) < 2:
            raise DomainError("a domain needs at least two ticks")
        if ticks[0] != 0:
            raise DomainError("the lowest tick must be 0")
        if ticks[-1] > 1:
            raise DomainError("ticks must lie in [0, 1]")
        for lo, hi in zip(ticks, ticks[1:]):
            if not lo < hi:
                raise DomainError(f"ticks not strictly increasing at {lo} -> {hi}")

    @classmethod
    def grid(cls, size: int) -> "ValueDomain":
        """Evenly spaced domain ``{0, 1/(size-1), ..., 1}``."""
        if size < 2:
            raise DomainError("grid needs at least two ticks")
        return cls(tuple(Fraction(i, size - 1) for i in range(size)))

    @classmethod
    def from_values(cls, values: Iterable[RationalLike]) -> "ValueDomain":
        return cls(tuple(to_rational(v) for v in values))

    def __len__(self) -> int:
        return len(self.ticks)

    def __iter__(self):
        return iter(self.ticks)

    def __contains__(self, value) -> bool:
        return value in self._index

    @cached_property
    def _index(self) -> dict[Fraction, int]:
        return {t: i for i, t in enumerate(self.ticks)}

    @property
    def top(self) -> Fraction:
        return self.ticks[-1]

    def index(self, value: Fraction) -> int:
        try:
            return self._index[value]
        except (KeyError, TypeError):
            raise NotATick(f"{value} is not a tick of the domain") from None

    def next_tick(self, value: Fraction) -> Fraction:
        i = self.index(value)
        if i == len(self.ticks) - 1:
            raise NoSuccessor(f"{value} is the top tick")
        return self.ticks[i + 1]

    def tick(self) -> Fraction:
        """Largest gap between adjacent ticks."""
        return max(hi - lo for lo, hi in zip(self.ticks, self.ticks[1:]))

    def floor(self, value: Fraction) -> Fraction:
        """Largest tick <= value (value must be >= 0)."""
        i = bisect_left(self.ticks, value)
        if i < len(self.ticks) and self.ticks[i] == value:
            return value
        return self.ticks[i - 1]

    def to_json(self) -> dict:
        return {"ticks": [format_rational(t) for t in self.ticks]}


def tick(domain: ValueDomain) -> Fraction:
    return domain.tick()


def next_tick(domain: ValueDomain, value: RationalLike) -> Fraction:
    return domain.next_tick(to_rational(value))


@dataclass(frozen=True)
class DiscreteDistribution:
    domain: ValueDomain
    pmf: tuple[Fraction, ...]

    def __post_init__(self):
        pmf = tuple(to_rational(p) for p in self.pmf)
        object.__setattr__(self, "pmf", pmf)
        if len(pmf) != len(self.domain):
            raise DomainError(
                f"pmf has {len(pmf)} entries for a domain of {len(self.domain)} ticks"
            )
        if any(p < 0 for p in pmf):
            raise DomainError("negative probability mass")
        if sum(pmf) != 1:
            raise DomainError(f"pmf sums to {sum(pmf)}, not 1")

    @classmethod
    def uniform(cls, domain: ValueDomain) -> "DiscreteDistribution":
        n = len(domain)
        return cls(domain, tuple(Fraction(1, n) for _ in range(n)))

    @cached_property
    def cdf(self) -> tuple[Fraction, ...]:
        acc = Fraction(0)
        out = []
        for p in self.pmf:
            acc += p
            out.append(acc)
        return tuple(out)

    def f(self, value: Fraction) -> Fraction:
        return self.pmf[self.domain.index(value)]

    def F(self, value: Fraction) -> Fraction:
        return self.cdf[self.domain.index(value)]

    def support(self) -> list[tuple[Fraction, Fraction]]:
        """(tick, mass) pairs with positive mass."""
        return [(t, p) for t, p in zip(self.domain.ticks, self.pmf) if p > 0]

    def virtual_value(self, i: int) -> Fraction:
        """Virtual value at tick index ``i`` (0-based)."""
        ticks = self.domain.ticks
        last = len(ticks) - 1
        if not 0 <= i <= last:
            raise IndexError(i)
        if i == last:
            return ticks[last]
        density = self.pmf[i]
        if density == 0:
            raise ZeroDensity(f"f({ticks[i]}) = 0")
        return ticks[i] - (1 - self.cdf[i]) / density * (ticks[i + 1] - ticks[i])

    def virtual_values(self) -> list[Fraction]:
        return [self.virtual_value(i) for i in range(len(self.domain))]

    def phi(self, value: Fraction) -> Fraction:
        return self.virtual_value(self.domain.index(value))

    def is_regular(self) -> bool:
        phis = self.virtual_values()
        return all(a < b for a, b in zip(phis, phis[1:]))

    def reserve(self) -> Fraction:
        """Smallest tick with nonnegative virtual value.

        Zero-density ticks below the answer are skipped; a zero-density tick
        that would have to be evaluated to decide raises :class:`ZeroDensity`
        unless some later positive-density tick qualifies.
        """
        pending: ZeroDensity | None = None
        for i, t in enumerate(self.domain.ticks):
            try:
                phi = self.virtual_value(i)
            except ZeroDensity as exc:
                pending = pending or exc
                continue
            if phi >= 0:
                return t
        # the top tick always qualifies, so this is unreachable
        raise pending or AssertionError("no tick with nonnegative virtual value")

    def to_json(self) -> dict:
        return {
            "ticks": [format_rational(t) for t in self.domain.ticks],
            "pmf": [format_rational(p) for p in self.pmf],
        }


def virtual_value(dist: DiscreteDistribution, i: int) -> Fraction:
    return dist.virtual_value(i)


def is_regular(dist: DiscreteDistribution) -> bool:
    return dist.is_regular()


def reserve(dist: DiscreteDistribution) -> Fraction:
    return dist.reserve()


def parse_ticks(items: Sequence[RationalLike]) -> tuple[Fraction, ...]:
    return tuple(to_rational(v) for v in items)


def load_domain(doc: Union[dict, str, Path]) -> tuple[ValueDomain, DiscreteDistribution | None]:
    """Load ``{"ticks": [...], "pmf": [...]}``; ``pmf`` is optional."""
    if not isinstance(doc, dict):
        doc = json.loads(Path(doc).read_text())
    if "ticks" in doc:
        domain = ValueDomain(parse_ticks(doc["ticks"]))
    elif "grid" in doc:
        domain = ValueDomain.grid(int(doc["grid"]))
    else:
        raise DomainError("document needs 'ticks' or 'grid'")
    pmf = doc.get("pmf")
    if pmf is None:
        return domain, None
    if pmf == "uniform":
        return domain, DiscreteDistribution.uniform(domain)
    return domain, DiscreteDistribution(domain, parse_ticks(pmf))
