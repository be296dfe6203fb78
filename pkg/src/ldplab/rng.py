"""Deterministic randomness plumbing.

Every stochastic routine takes a 64-bit master seed.  Parallel work units
derive their own stream from (master seed, task index...) through a fixed
splitmix64 chain, so results are bit-identical no matter how tasks are
scheduled across workers.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(z):
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(master_seed, *indices):
    """Mix a master seed with task indices into a new 64-bit seed.

    The chain is order-sensitive: derive_seed(s, 1, 2) != derive_seed(s, 2, 1).
    """
    state = _splitmix64(int(master_seed) & _MASK64)
    for ix in indices:
        state = _splitmix64(state ^ _splitmix64((int(ix) + 0x9E37) & _MASK64))
    return state


def make_rng(seed, *indices):
    """np.random.Generator seeded from the derived stream key."""
    return np.random.default_rng(derive_seed(seed, *indices) if indices else int(seed) & _MASK64)
