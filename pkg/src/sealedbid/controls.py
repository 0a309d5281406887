"""Deliberately flawed mechanisms used to show the checks can fail.

Neither is meant for real use: each exists so that a test can assert the
harness reports a violation (or stays within a bound) for a known reason.
"""

from __future__ import annotations

from fractions import Fraction

from .mechanism import ExpectedOutcome, SecondPriceAuction
from .outcome import AuctionOutcome


class FirstPriceAuction(SecondPriceAuction):
    """Same winners as second price, but every winner pays its own bid.

    Breaks the payment sandwich and rewards bid shading.
    """

    name = "first-price"

    def outcome_for_priority(self, bids, priority) -> AuctionOutcome:
        base = super().outcome_for_priority(bids, priority)
        pay = {i: (bids[i] if base.allocations[i] else Fraction(0)) for i in bids}
        total = sum(pay.values(), Fraction(0))
        return AuctionOutcome(dict(base.allocations), pay, base.items_sold, total, Fraction(0))

    def expected(self, bids):
        return ExpectedOutcome.from_distribution(self.outcome_distribution(bids))


class TickSkimmingAuction(SecondPriceAuction):
    """Second price where the platform keeps half a tick of every payment."""

    name = "tick-skimming"

    def outcome_for_priority(self, bids, priority) -> AuctionOutcome:
        base = super().outcome_for_priority(bids, priority)
        skim = self.domain.tick() / 2
        fee = sum((min(skim, p) for p in base.payments.values()), Fraction(0))
        return AuctionOutcome(dict(base.allocations), dict(base.payments), base.items_sold,
                              base.seller_revenue - fee, fee)

    def expected(self, bids):
        return ExpectedOutcome.from_distribution(self.outcome_distribution(bids))


CONTROLS = {"first-price": FirstPriceAuction, "tick-skimming": TickSkimmingAuction}
