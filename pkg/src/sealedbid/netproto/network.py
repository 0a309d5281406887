"""Configuration, the shared blockchain, and the logical round schedule."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

from ..crypto import nitc
from ..crypto.merkle import vc_gen
from ..crypto.por import DEFAULT_KAPPA
from ..crypto.relation import Context
from ..domain import DiscreteDistribution, ValueDomain, to_rational
from ..mechanism import AscendingAuction, SecondPriceAuction

MECHANISMS = ("second-price", "ascending")


class ConfigInvalid(ValueError):
    pass


@dataclass
class Blockchain:
    """Append-only log; every player reads the same entries."""

    log: list[tuple[Any, Any]] = field(default_factory=list)

    def post(self, author, payload) -> int:
        self.log.append((author, payload))
        return len(self.log) - 1

    def read(self) -> list[tuple[Any, Any]]:
        return list(self.log)

    def __len__(self):
        return len(self.log)


@dataclass
class ProtocolConfig:
    """Parameters of one protocol instance.

    ``deadlines`` are logical round indices ``(T1, T2, T3, T4)``: tuples are
    due by T1, openings by T2, forced decryption finishes by T3 and the
    blockchain post lands at T4. A player times out on a message that is
    absent at the relevant boundary.
    """

    domain: ValueDomain
    k: int
    reserve: Optional[Fraction] = None
    dist: Optional[DiscreteDistribution] = None
    mechanism: str = "second-price"
    lambda_bits: int = 256
    kappa: int = DEFAULT_KAPPA
    nitc_T: int = 1 << 10
    modulus_bits: int = nitc.TEST_MODULUS_BITS
    deadlines: tuple[int, int, int, int] = (1, 3, 4, 7)
    seed: int = 0
    crs_seed: int = 0
    platform_coin: Optional[bytes] = None

    def __post_init__(self):
        if self.k < 1:
            raise ConfigInvalid("k must be at least 1")
        if self.mechanism not in MECHANISMS:
            raise ConfigInvalid(f"unknown mechanism {self.mechanism!r}")
        if self.lambda_bits < 8 or self.lambda_bits % 8:
            raise ConfigInvalid("lambda_bits must be a positive multiple of 8")
        if self.kappa < 1:
            raise ConfigInvalid("kappa must be positive")
        if self.nitc_T < 1:
            raise ConfigInvalid("NITC difficulty must be positive")
        t1, t2, t3, t4 = self.deadlines
        if not (0 < t1 and t1 + 1 < t2 < t3 and t3 + 2 < t4):
            raise ConfigInvalid(f"deadlines {self.deadlines} leave no room for every step")
        if self.reserve is None:
            if self.dist is None:
                raise ConfigInvalid("give a reserve or a distribution")
            self.reserve = self.dist.reserve()
        self.reserve = to_rational(self.reserve)
        if self.reserve not in self.domain:
            raise ConfigInvalid(f"reserve {self.reserve} is not a tick")
        if self.platform_coin is not None and len(self.platform_coin) != self.coin_bytes:
            raise ConfigInvalid("platform_coin has the wrong length")

    @property
    def coin_bytes(self) -> int:
        return self.lambda_bits // 8

    def rules(self):
        cls = SecondPriceAuction if self.mechanism == "second-price" else AscendingAuction
        return cls(self.domain, self.reserve, self.k)

    def context(self) -> Context:
        crs = nitc.cached_gen(self.modulus_bits, self.nitc_T, self.crs_seed)
        return Context(crs, vc_gen(), self.coin_bytes, self.domain)

    def rounds(self) -> dict[str, int]:
        t1, t2, t3, t4 = self.deadlines
        return {"a": 0, "b": t1, "c": t1, "d": t1 + 1, "e": t2, "f": t3, "g": t3,
                "h": t3 + 1, "i": t3 + 2, "j": t4}
