"""Systematic Reed-Solomon erasure code over GF(65537).

A message of ``L`` symbols is the evaluation of the unique degree < L
polynomial at ``0..L-1``; the codeword extends it to ``0..N-1`` with
``N = ceil(3L/2)``. Any ``L`` known positions reconstruct the message, so
the 2/3 guarantee holds with room to spare.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

P = 65537


class InsufficientSymbols(ValueError):
    pass


@lru_cache(maxsize=1)
def _inverses() -> np.ndarray:
    inv = [0, 1] + [0] * (P - 2)
    for i in range(2, P):
        inv[i] = (P - (P // i) * inv[P % i] % P) % P
    return np.array(inv, dtype=np.int64)


def codeword_length(message_len: int) -> int:
    return -(-3 * message_len // 2)


def guaranteed_threshold(codeword_len: int) -> int:
    return -(-2 * codeword_len // 3)


@dataclass(frozen=True)
class RsCodeword:
    symbols: tuple[int, ...]
    message_len: int

    def __len__(self):
        return len(self.symbols)


def _prod_mod(matrix: np.ndarray) -> np.ndarray:
    """Row-wise product mod P."""
    acc = np.ones(matrix.shape[0], dtype=np.int64)
    for col in range(matrix.shape[1]):
        acc = acc * matrix[:, col] % P
    return acc


def _interpolation_matrix(xs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """M with ``M @ y = P(targets)`` for the interpolant through ``(xs, y)``.

    ``targets`` must be disjoint from ``xs``.
    """
    inv = _inverses()
    diffs = (xs[:, None] - xs[None, :]) % P
    np.fill_diagonal(diffs, 1)
    weights = inv[_prod_mod(diffs)]  # barycentric weights 1 / prod(x_j - x_m)
    tdiff = (targets[:, None] - xs[None, :]) % P
    ell = _prod_mod(tdiff)
    m = inv[tdiff] * weights[None, :] % P
    return m * ell[:, None] % P


@lru_cache(maxsize=64)
def _encode_matrix(message_len: int) -> np.ndarray:
    n = codeword_length(message_len)
    return _interpolation_matrix(np.arange(message_len, dtype=np.int64),
                                 np.arange(message_len, n, dtype=np.int64))


def rs_encode(message: Sequence[int]) -> RsCodeword:
    L = len(message)
    if L < 1:
        raise ValueError("empty message")
    y = np.asarray(message, dtype=np.int64)
    if y.min() < 0 or y.max() >= P:
        raise ValueError("symbols must lie in [0, 65537)")
    tail = _encode_matrix(L) @ y % P
    return RsCodeword(tuple(int(v) for v in message) + tuple(int(v) for v in tail), L)


def rs_recons(partial: Mapping[int, int], message_len: int) -> list[int]:
    """Message from any ``message_len`` known positions (erasures only)."""
    L = message_len
    known = sorted(partial)
    if len(known) < L:
        raise InsufficientSymbols(f"{len(known)} known positions, need {L}")
    if all(i in partial for i in range(L)):
        return [int(partial[i]) for i in range(L)]
    xs = np.array(known[:L], dtype=np.int64)
    ys = np.array([partial[i] for i in known[:L]], dtype=np.int64)
    chosen = set(known[:L])
    missing = [t for t in range(L) if t not in chosen]
    out = {t: int(partial[t]) for t in range(L) if t in chosen}
    if missing:
        vals = _interpolation_matrix(xs, np.array(missing, dtype=np.int64)) @ ys % P
        out.update(zip(missing, (int(v) for v in vals)))
    return [out[t] for t in range(L)]


def bytes_to_symbols(data: bytes) -> list[int]:
    """Length-prefixed, 2-byte big-endian symbols (always < 65537)."""
    blob = len(data).to_bytes(4, "big") + data
    if len(blob) % 2:
        blob += b"\x00"
    return [int.from_bytes(blob[i:i + 2], "big") for i in range(0, len(blob), 2)]


def symbols_to_bytes(symbols: Sequence[int]) -> bytes:
    blob = b"".join(int(s).to_bytes(2, "big") for s in symbols)
    size = int.from_bytes(blob[:4], "big")
    return blob[4:4 + size]


def symbol_bytes(symbol: int) -> bytes:
    return int(symbol).to_bytes(3, "big")
