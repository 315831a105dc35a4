"""Deterministic RNG stream derivation.

Every stochastic operation takes an integer seed and derives independent
substreams from (seed, index, ...) paths, so serial and parallel execution
orders produce identical results.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_rng(*path: int) -> np.random.Generator:
    """Return a Generator seeded from an integer path such as (seed, point, trial)."""
    entropy = [int(p) & _MASK64 for p in path]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def hash_floats(*values: float) -> int:
    """Stable 64-bit digest of float values, for position-keyed substreams."""
    h = hashlib.blake2b(digest_size=8)
    for v in values:
        h.update(np.float64(v).tobytes())
    return int.from_bytes(h.digest(), "little")
