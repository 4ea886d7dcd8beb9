"""Seed handling shared by every stochastic routine.

Streams are derived statelessly from ``(master seed, key...)`` through
:class:`numpy.random.SeedSequence`, so the random numbers a given trial
chunk sees do not depend on which worker runs it or in what order.
"""

from __future__ import annotations

import numpy as np


def as_rng(seed) -> np.random.Generator:
    """Return a Generator; pass Generators through untouched."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``key`` under ``master_seed``."""
    if master_seed is None:
        raise ValueError("a master seed is required for derived streams")
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
