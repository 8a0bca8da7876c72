"""Deterministic seed derivation for multi-run experiments.

Every run in a comparison gets its own seed derived from the experiment's
base seed and the run coordinates, so results do not depend on execution
order or parallelism.
"""

from __future__ import annotations

import hashlib


def derive_seed(base_seed: int, *coords: int) -> int:
    """64-bit seed = blake2b over the decimal base seed and coordinates
    joined by unit separators.  Stable across platforms and sessions."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(base_seed)).encode())
    for c in coords:
        h.update(b"\x1f")
        h.update(str(int(c)).encode())
    return int.from_bytes(h.digest(), "little")
