"""Auction outcomes, bid vectors and coin strings."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Union

from .domain import ValueDomain, format_rational, to_rational

SELLER = 0


class InvalidBid(ValueError):
    pass


class DuplicateIdentity(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


BidsLike = Union[Mapping[int, object], Iterable[tuple[int, object]]]


def as_bids(bids: BidsLike, domain: ValueDomain | None = None) -> dict[int, Fraction]:
    """Normalise a bid vector to ``{identity: bid}``.

    Identities must be distinct non-negative integers other than the seller's
    ``0``; when ``domain`` is given every bid must be one of its ticks.
    """
    items = bids.items() if isinstance(bids, Mapping) else bids
    out: dict[int, Fraction] = {}
    for ident, bid in items:
        ident = int(ident)
        if ident < 0:
            raise InvalidBid(f"negative identity {ident}")
        if ident == SELLER:
            raise InvalidBid("identity 0 is reserved for the seller")
        if ident in out:
            raise DuplicateIdentity(f"identity {ident} bids twice")
        value = to_rational(bid)
        if domain is not None and value not in domain:
            raise InvalidBid(f"bid {value} of identity {ident} is not a tick")
        out[ident] = value
    return out


@dataclass(frozen=True)
class AuctionOutcome:
    allocations: dict[int, int]
    payments: dict[int, Fraction]
    items_sold: int
    seller_revenue: Fraction
    platform_revenue: Fraction = field(default=Fraction(0))

    @classmethod
    def empty(cls, identities: Iterable[int] = ()) -> "AuctionOutcome":
        ids = list(identities)
        return cls({i: 0 for i in ids}, {i: Fraction(0) for i in ids}, 0, Fraction(0), Fraction(0))

    @property
    def winners(self) -> list[int]:
        return sorted(i for i, x in self.allocations.items() if x)

    @property
    def total_payment(self) -> Fraction:
        return sum(self.payments.values(), Fraction(0))

    def violations(self, values: Mapping[int, Fraction] | None = None) -> list[str]:
        """Consistency, budget and (given true values) IR violations."""
        found = []
        if self.items_sold != sum(self.allocations.values()):
            found.append(f"items_sold {self.items_sold} != sum of allocations")
        if self.seller_revenue > self.total_payment:
            found.append("seller revenue exceeds total payment")
        if self.platform_revenue != self.total_payment - self.seller_revenue:
            found.append("platform revenue is not payment minus seller revenue")
        for i, x in self.allocations.items():
            p = self.payments.get(i, Fraction(0))
            if x not in (0, 1):
                found.append(f"allocation of {i} is {x}")
            if p < 0:
                found.append(f"negative payment for {i}")
            if not x and p:
                found.append(f"loser {i} pays {p}")
            if values is not None and i in values and x * values[i] - p < 0:
                found.append(f"IR violated for {i}")
        return found

    def private(self, ident: int) -> tuple:
        """What ``ident`` learns: ``(x, p)`` for a buyer, ``(t, mu_S)`` for the seller."""
        if ident == SELLER:
            return (self.items_sold, self.seller_revenue)
        return (self.allocations.get(ident, 0), self.payments.get(ident, Fraction(0)))

    def to_json(self) -> dict:
        return {
            "allocations": {str(i): x for i, x in sorted(self.allocations.items())},
            "payments": {str(i): format_rational(p) for i, p in sorted(self.payments.items())},
            "t": self.items_sold,
            "seller_revenue": format_rational(self.seller_revenue),
            "platform_revenue": format_rational(self.platform_revenue),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, doc: Mapping) -> "AuctionOutcome":
        return cls(
            allocations={int(i): int(x) for i, x in doc["allocations"].items()},
            payments={int(i): to_rational(p) for i, p in doc["payments"].items()},
            items_sold=int(doc["t"]),
            seller_revenue=to_rational(doc["seller_revenue"]),
            platform_revenue=to_rational(doc["platform_revenue"]),
        )


def xor_coin(coins: Iterable[bytes]) -> bytes:
    """Bitwise XOR of equal-length coin strings."""
    coins = [bytes(c) for c in coins]
    if not coins:
        raise LengthMismatch("no coins to combine")
    size = len(coins[0])
    acc = 0
    for c in coins:
        if len(c) != size:
            raise LengthMismatch(f"coin lengths {size} and {len(c)} differ")
        acc ^= int.from_bytes(c, "big")
    return acc.to_bytes(size, "big")
