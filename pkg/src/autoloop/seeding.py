"""Deterministic derivation of nested random streams from one root seed."""

from __future__ import annotations

import numpy as np


def split_seed(seed: int, *path: int) -> int:
    """Derive a 64-bit sub-seed from ``seed`` and an integer index path.

    The same (seed, path) always yields the same value, distinct paths yield
    statistically independent streams, and paths of different lengths never
    collide. This is the only splitting primitive in the package; every
    consumer of randomness gets its stream through it.
    """
    key = tuple(int(p) for p in path)
    ss = np.random.SeedSequence(int(seed), spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    """A fresh generator for ``seed``; equal seeds replay identical draws."""
    return np.random.default_rng(int(seed))
