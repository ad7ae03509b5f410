"""Seeded, splittable random streams.

A stream is identified by a 64-bit seed and a tuple of non-negative integer
ids (experiment, replication, arm, ...).  The generator is numpy's PCG64
seeded from ``SeedSequence(entropy=seed, spawn_key=ids)``; both algorithms
are documented by numpy and stable across platforms and releases, so a port
can reproduce the same draws.
"""
from __future__ import annotations

import numpy as np

# experiment ids used as the first spawn key component
COVERAGE = 1
STOPPING = 2
BESTARM = 3


def rng_stream(seed: int, *ids: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(i) for i in ids))
    return np.random.Generator(np.random.PCG64(ss))
