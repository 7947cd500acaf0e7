"""Small shared helpers."""

from __future__ import annotations

import hashlib


def derive_seed(*parts: object) -> int:
    """Deterministically mix values into a 63-bit seed.

    Stable across processes and platforms (unlike builtin hash()), so frozen
    sampling decisions can be reproduced from run-level seeds.
    """
    text = "\x1f".join(repr(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") >> 1
