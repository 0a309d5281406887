"""Timed commitments from RSW time-lock puzzles with Wesolowski-style proofs.

Commit: ``u = g^s``, ``w = h^s = u^(2^T)``, ``ct = m xor KS(H(w))``,
``tag = H(m || w)``. The committer opens with ``s``; anyone else can
recover ``w`` by ``T`` sequential squarings of ``u`` and publish a proof of
exponentiation so the forced opening is cheap to check.

Desk-scale instantiation: binding and publicly verifiable (forced)
openings, but no non-malleability (IND-CCA) guarantee.
"""

from __future__ import annotations

import random
import secrets
from dataclasses import dataclass
from functools import lru_cache

import gmpy2

from .encoding import H, int_bytes, keystream, pack, unpack, xor_bytes

TEST_MODULUS_BITS = 512
DEFAULT_MODULUS_BITS = 2048
MAX_MESSAGE = 1024
POE_CHALLENGE_BITS = 128


class MalformedCommitment(ValueError):
    pass


class DecryptionInconsistent(UserWarning):
    """Forced decryption recovered bytes whose tag does not match."""


@dataclass(frozen=True)
class NitcCrs:
    N: int
    g: int
    h: int
    T: int
    hash_id: str = "sha256"

    @property
    def width(self) -> int:
        return (self.N.bit_length() + 7) // 8

    def to_bytes(self) -> bytes:
        w = self.width
        return pack(int_bytes(self.N, w), int_bytes(self.g, w), int_bytes(self.h, w),
                    int_bytes(self.T, 8), self.hash_id.encode())


@dataclass(frozen=True)
class TimedCommitment:
    u: int
    ct: bytes
    tag: bytes

    def to_bytes(self, width: int) -> bytes:
        return pack(int_bytes(self.u, width), self.ct, self.tag)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "TimedCommitment":
        u, ct, tag = unpack(blob)
        return cls(int.from_bytes(u, "big"), ct, tag)


@dataclass(frozen=True)
class Opening:
    message: bytes
    s: int


@dataclass(frozen=True)
class ForcedOpening:
    message: bytes
    w: int
    pi: int
    consistent: bool = True


def _random_safe_prime(bits: int, rng) -> int:
    while True:
        q = gmpy2.mpz(rng.getrandbits(bits - 1) | (1 << (bits - 2)) | 1)
        if q % 3 != 2:  # p = 2q+1 divisible by 3 otherwise
            continue
        if gmpy2.is_prime(q, 25) and gmpy2.is_prime(2 * q + 1, 25):
            return int(2 * q + 1)


def square_chain(x: int, T: int, N: int) -> int:
    """``x^(2^T) mod N`` by ``T`` sequential squarings."""
    y = gmpy2.mpz(x)
    n = gmpy2.mpz(N)
    for _ in range(T):
        y = y * y % n
    return int(y)


def gen(security_bits: int = DEFAULT_MODULUS_BITS, T: int = 1 << 10, rng=None) -> NitcCrs:
    """Trusted setup. The factorisation is used once for the shortcut ``h``
    and then dropped."""
    if T < 1:
        raise ValueError("difficulty T must be at least 1")
    rng = rng or secrets.SystemRandom()
    half = security_bits // 2
    p = _random_safe_prime(half, rng)
    while True:
        q = _random_safe_prime(security_bits - half, rng)
        if q != p:
            break
    N = p * q
    phi = (p - 1) * (q - 1)
    while True:
        a = rng.randrange(2, N - 1)
        if gmpy2.gcd(a, N) == 1:
            g = pow(a, 2, N)
            if g not in (1, N - 1):
                break
    h = int(gmpy2.powmod(g, gmpy2.powmod(2, T, phi), N))
    return NitcCrs(N, g, h, T)


@lru_cache(maxsize=16)
def cached_gen(security_bits: int, T: int, seed: int) -> NitcCrs:
    return gen(security_bits, T, random.Random(seed))


def _encrypt(crs: NitcCrs, w: int, message: bytes) -> bytes:
    key = H(b"nitc-key", int_bytes(w, crs.width))
    return xor_bytes(message, keystream(key, len(message)))


def _tag(crs: NitcCrs, w: int, message: bytes) -> bytes:
    return H(b"nitc-tag", pack(message, int_bytes(w, crs.width)))


def com(crs: NitcCrs, message: bytes, rng=None) -> tuple[TimedCommitment, bytes, Opening]:
    """Returns ``(cm, pi_com, opening)``."""
    if len(message) > MAX_MESSAGE:
        raise ValueError(f"message longer than {MAX_MESSAGE} bytes")
    rng = rng or secrets.SystemRandom()
    s = rng.randrange(1, crs.N)
    u = int(gmpy2.powmod(crs.g, s, crs.N))
    w = int(gmpy2.powmod(crs.h, s, crs.N))
    cm = TimedCommitment(u, _encrypt(crs, w, message), _tag(crs, w, message))
    return cm, pi_com(crs, cm), Opening(message, s)


def pi_com(crs: NitcCrs, cm: TimedCommitment) -> bytes:
    """Structural well-formedness statement: element width and field lengths."""
    return pack(int_bytes(crs.width, 2), int_bytes(len(cm.ct), 2), int_bytes(len(cm.tag), 2))


def com_vf(crs: NitcCrs, cm: TimedCommitment, proof: bytes) -> bool:
    if not isinstance(cm, TimedCommitment):
        return False
    if not (1 < cm.u < crs.N) or gmpy2.gcd(cm.u, crs.N) != 1:
        return False
    if len(cm.tag) != 32 or len(cm.ct) > MAX_MESSAGE:
        return False
    return proof == pi_com(crs, cm)


def dec_vf(crs: NitcCrs, cm: TimedCommitment, message: bytes, opening: Opening) -> bool:
    s = opening.s
    if not 0 < s < crs.N:
        return False
    if int(gmpy2.powmod(crs.g, s, crs.N)) != cm.u:
        return False
    w = int(gmpy2.powmod(crs.h, s, crs.N))
    if len(message) != len(cm.ct) or _encrypt(crs, w, cm.ct) != message:
        return False
    return _tag(crs, w, message) == cm.tag


def poe_challenge(crs: NitcCrs, u: int, w: int) -> int:
    seed = H(b"poe", int_bytes(u, crs.width), int_bytes(w, crs.width), int_bytes(crs.T, 8))
    return int(gmpy2.next_prime(int.from_bytes(seed[: POE_CHALLENGE_BITS // 8], "big")))


def poe_prove(crs: NitcCrs, u: int, w: int) -> int:
    ell = poe_challenge(crs, u, w)
    return int(gmpy2.powmod(u, (1 << crs.T) // ell, crs.N))


def poe_verify(crs: NitcCrs, u: int, w: int, pi: int) -> bool:
    if not (0 < pi < crs.N and 0 < w < crs.N):
        return False
    ell = poe_challenge(crs, u, w)
    r = int(gmpy2.powmod(2, crs.T, ell))
    lhs = gmpy2.powmod(pi, ell, crs.N) * gmpy2.powmod(u, r, crs.N) % crs.N
    return int(lhs) == w


def fdec(crs: NitcCrs, cm: TimedCommitment, proof: bytes) -> ForcedOpening:
    """Recover the message by brute force; ``consistent`` is False when the
    tag does not match (adversarial commitment)."""
    if not com_vf(crs, cm, proof):
        raise MalformedCommitment("commitment fails ComVf")
    w = square_chain(cm.u, crs.T, crs.N)
    message = _encrypt(crs, w, cm.ct)
    return ForcedOpening(message, w, poe_prove(crs, cm.u, w), _tag(crs, w, message) == cm.tag)


def fdec_vf(crs: NitcCrs, cm: TimedCommitment, message: bytes, forced: ForcedOpening) -> bool:
    """Accepts the unique plaintext determined by ``u``; the tag is not
    required to match so that every well-formed commitment has a verifiable
    forced opening."""
    if not poe_verify(crs, cm.u, forced.w, forced.pi):
        return False
    return len(message) == len(cm.ct) and _encrypt(crs, forced.w, cm.ct) == message


def verify_opening(crs: NitcCrs, cm: TimedCommitment, message: bytes, proof) -> bool:
    """DecVf or FDecVf depending on the proof's type."""
    if isinstance(proof, Opening):
        return dec_vf(crs, cm, message, proof)
    if isinstance(proof, ForcedOpening):
        return fdec_vf(crs, cm, message, proof)
    return False
