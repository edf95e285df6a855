"""Deterministic seed derivation for per-session / per-trial parallelism."""

from __future__ import annotations

import hashlib
import struct

_U64 = (1 << 64) - 1


def derive_seed(seed: int, *tokens) -> int:
    """Stable 64-bit sub-seed from a base seed and string-able tokens.

    Unlike Python's builtin hash this is stable across processes, so
    artifacts stay byte-identical between reruns.
    """
    digest = hashlib.sha256()
    digest.update(struct.pack("<Q", seed & _U64))
    for token in tokens:
        digest.update(str(token).encode("utf-8"))
        digest.update(b"\x00")
    return int.from_bytes(digest.digest()[:8], "little")
