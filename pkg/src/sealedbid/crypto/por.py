"""Proof-of-retrievability spot checks against a committed RS codeword."""

from __future__ import annotations

from typing import Mapping, Sequence

from .merkle import MerkleProof, VcCrs, vc_open, vc_vf
from .rs import symbol_bytes

DEFAULT_KAPPA = 64


class ChallengeTooLarge(ValueError):
    pass


def por_challenge(rng, kappa: int, codeword_len: int) -> list[int]:
    """``kappa`` distinct uniform positions."""
    if kappa > codeword_len:
        raise ChallengeTooLarge(f"kappa={kappa} exceeds codeword length {codeword_len}")
    return sorted(rng.sample(range(codeword_len), kappa))


def por_respond(crs: VcCrs, aux, symbols: Sequence[int], query: Sequence[int]):
    answers = {q: symbol_bytes(symbols[q]) for q in query}
    return answers, vc_open(crs, aux, query, len(symbols))


def por_verify(
    crs: VcCrs,
    digest: bytes,
    codeword_len: int,
    query: Sequence[int],
    answers: Mapping[int, bytes],
    proof: MerkleProof,
) -> bool:
    if set(answers) != set(query):
        return False
    return vc_vf(crs, codeword_len, digest, query, answers, proof)
