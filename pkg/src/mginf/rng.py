"""Seed splitting for reproducible replicate batches.

Replicate ``i`` of a run with master seed ``s`` always draws from
``SeedSequence(s, spawn_key=(i,))``, so results do not depend on how the
replicates are distributed over workers.
"""
from __future__ import annotations

import numpy as np


def replicate_seed(master: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master), spawn_key=(int(index),))


def replicate_rng(master: int, index: int) -> np.random.Generator:
    return np.random.default_rng(replicate_seed(master, index))


def substream(master: int, *path: int) -> np.random.Generator:
    """Generator for a nested stream, e.g. (rung, replicate)."""
    return np.random.default_rng(np.random.SeedSequence(int(master), spawn_key=tuple(int(p) for p in path)))


def as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
