"""Seeded, counter-based random streams.

Every stream is a Philox generator keyed by a root seed plus a tuple of
integers naming the task (cell, replication, chain stage, ...), so a
task's draws never depend on which tasks ran before it or on which
worker ran it.
"""

import numpy as np

MAX_SEED = 2**64 - 1


def check_seed(seed):
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def make_rng(seed, *stream):
    """Return an independent generator for ``(seed, *stream)``."""
    if isinstance(seed, np.random.Generator):
        return seed
    ss = np.random.SeedSequence(check_seed(seed), spawn_key=tuple(int(k) for k in stream))
    return np.random.Generator(np.random.Philox(ss))
