"""Seeded PCG64 substreams.

Every random decision in a run draws from a stream keyed by
``(seed, *key)``, so results never depend on the order in which
independent pieces of work (repeats, episodes) are executed.
"""

from __future__ import annotations

import numpy as np

# stream purposes within one repeat
INIT = 0
TRAIN = 1
DEV = 2
TEST = 3
SPLIT = 4


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent PCG64 generator for ``(seed, *key)``."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *key: int) -> int:
    """A 64-bit integer seed for ``(seed, *key)``, for handing to a nested sampler."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
