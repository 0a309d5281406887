"""Canonical byte layouts: big-endian integers and length-prefixed fields."""

from __future__ import annotations

import hashlib
from typing import Iterable

HASH_ID = "sha256"


def H(*parts: bytes) -> bytes:
    return hashlib.sha256(b"".join(parts)).digest()


def int_bytes(x: int, size: int | None = None) -> bytes:
    if x < 0:
        raise ValueError("negative integer in canonical encoding")
    if size is None:
        size = max(1, (x.bit_length() + 7) // 8)
    return int(x).to_bytes(size, "big")


def pack(*fields: bytes) -> bytes:
    """``len(f) || f`` for each field, lengths as 4-byte big-endian."""
    out = bytearray()
    for f in fields:
        f = bytes(f)
        out += len(f).to_bytes(4, "big")
        out += f
    return bytes(out)


def unpack(blob: bytes) -> list[bytes]:
    fields = []
    pos = 0
    blob = bytes(blob)
    while pos < len(blob):
        if pos + 4 > len(blob):
            raise ValueError("truncated length prefix")
        size = int.from_bytes(blob[pos:pos + 4], "big")
        pos += 4
        if pos + size > len(blob):
            raise ValueError("truncated field")
        fields.append(blob[pos:pos + size])
        pos += size
    return fields


def keystream(key: bytes, size: int) -> bytes:
    """SHA-256 in counter mode."""
    blocks = []
    for ctr in range((size + 31) // 32):
        blocks.append(H(key, ctr.to_bytes(8, "big")))
    return b"".join(blocks)[:size]


def xor_bytes(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def concat_digest(items: Iterable[bytes]) -> bytes:
    return H(*(pack(i) for i in items))
