"""Deterministic sub-seed derivation.

All randomness in the package flows from one global seed through named
labels, so individual stages (terrain, drift, triplets, init, ...) can be
varied independently without perturbing the others.
"""
import zlib

import numpy as np


def derived_seed(seed: int, label: str) -> int:
    """A stable 63-bit sub-seed for (seed, label)."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFF, zlib.crc32(label.encode("utf-8"))])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


def derived_rng(seed: int, label: str) -> np.random.Generator:
    """A Generator seeded from (seed, label)."""
    return np.random.default_rng(derived_seed(seed, label))
