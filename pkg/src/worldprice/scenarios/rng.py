"""Seeded random streams.

Every stream is numpy's PCG64 bit generator fed by a SeedSequence, so draws
are identical across platforms for a given (seed, key) pair. Sub-streams are
keyed by small integer counters (replicate, attempt, ...) instead of reusing
one generator sequentially, which keeps results independent of scheduling.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def rng_for(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & MASK64, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def sub_seed(seed: int, *key: int) -> int:
    """A derived 64-bit seed for handing to another generator."""
    ss = np.random.SeedSequence(int(seed) & MASK64, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
