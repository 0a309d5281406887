"""Merkle-tree vector commitment (Gen, Digest, Open, Vf).

Leaves are domain-separated and carry their position, and the published
digest binds the vector length, so an opening is position-binding.
"""

from __future__ import annotations

from dataclasses import dataclass
from hashlib import sha256
from typing import Mapping, Sequence

from .encoding import H, int_bytes


class IndexOutOfRange(IndexError):
    pass


@dataclass(frozen=True)
class VcCrs:
    tag: bytes = b"sealedbid-vc-v1"


def vc_gen(tag: bytes = b"sealedbid-vc-v1") -> VcCrs:
    return VcCrs(tag)


@dataclass(frozen=True)
class MerkleProof:
    length: int
    paths: dict[int, tuple[bytes, ...]]


def _leaf(crs: VcCrs, index: int, payload: bytes) -> bytes:
    return sha256(b"\x00" + crs.tag + index.to_bytes(8, "big") + len(payload).to_bytes(4, "big")
                  + payload).digest()


def _node(left: bytes, right: bytes) -> bytes:
    return sha256(b"\x01" + left + right).digest()


def _empty(level: int) -> bytes:
    return H(b"\x02", int_bytes(level, 2))


def _root_digest(crs: VcCrs, length: int, root: bytes) -> bytes:
    return H(b"\x03", crs.tag, int_bytes(length, 8), root)


def vc_digest(crs: VcCrs, vector: Sequence[bytes]) -> tuple[bytes, list[list[bytes]]]:
    """Returns ``(digest, aux)``; ``aux`` holds every tree level."""
    level = [_leaf(crs, i, bytes(v)) for i, v in enumerate(vector)]
    if not level:
        level = [_empty(0)]
    levels = [level]
    depth = 0
    while len(level) > 1:
        if len(level) % 2:
            level = level + [_empty(depth)]
            levels[-1] = level
        level = [_node(level[i], level[i + 1]) for i in range(0, len(level), 2)]
        levels.append(level)
        depth += 1
    return _root_digest(crs, len(vector), level[0]), levels


def vc_open(crs: VcCrs, aux: list[list[bytes]], query: Sequence[int], length: int) -> MerkleProof:
    paths = {}
    for q in query:
        if not 0 <= q < length:
            raise IndexOutOfRange(q)
        idx = q
        path = []
        for level in aux[:-1]:
            path.append(level[idx ^ 1])
            idx //= 2
        paths[q] = tuple(path)
    return MerkleProof(length, paths)


def vc_vf(
    crs: VcCrs,
    length: int,
    digest: bytes,
    query: Sequence[int],
    answers: Mapping[int, bytes],
    proof: MerkleProof,
) -> bool:
    """An empty query verifies vacuously."""
    if proof.length != length:
        return False
    depth = max(0, (length - 1).bit_length())
    for q in query:
        if not 0 <= q < length or q not in answers or q not in proof.paths:
            return False
        if len(proof.paths[q]) != depth:
            return False
        node = _leaf(crs, q, bytes(answers[q]))
        idx = q
        for sibling in proof.paths[q]:
            node = _node(node, sibling) if idx % 2 == 0 else _node(sibling, node)
            idx //= 2
        if _root_digest(crs, length, node) != digest:
            return False
    return True
