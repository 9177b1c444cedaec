"""Deterministic seed derivation for per-worker random streams."""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def mix_seed(seed: int, index: int) -> int:
    """splitmix64-style hash of (seed, index): deterministic, decorrelated
    across indices, stable across platforms."""
    z = (int(seed) + (int(index) + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derived_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(mix_seed(seed, index))
