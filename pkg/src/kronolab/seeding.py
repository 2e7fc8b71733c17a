"""Deterministic seed derivation.

Every random object in the package is drawn from a counter-based Philox
generator keyed by a 64-bit seed, and child seeds are derived from a master
seed with a splitmix64 chain.  The same (master_seed, trial, stream) triple
therefore yields the same draw on every platform and under any degree of
parallelism.
"""

import numpy as np

_MASK = (1 << 64) - 1

# stream tags keep independent draws within one trial decorrelated
STREAM_UNITARY = 1
STREAM_PROJ1 = 2
STREAM_PROJ2 = 3
STREAM_V = 4


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return (x ^ (x >> 31)) & _MASK


def derive_seed(master_seed: int, *parts: int) -> int:
    """Stable 64-bit mix of a master seed and any number of stream labels."""
    state = _splitmix64(master_seed & _MASK)
    for part in parts:
        state = _splitmix64(state ^ (part & _MASK))
    return state


def generator(seed: int) -> np.random.Generator:
    """Counter-based generator keyed directly by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK))
