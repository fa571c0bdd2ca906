"""Seeded random sources.

Every stochastic routine takes a ``numpy.random.Generator`` backed by the
Philox counter-based bit generator.  Child streams for parallel trials are
derived with :func:`derive_seed`, which hashes ``(seed, index)`` through a
``SeedSequence`` spawn key, so trial ``i`` sees the same stream regardless of
which worker runs it.
"""

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def derive_seed(seed: int, index: int) -> int:
    """64-bit child seed for stream ``index`` of master ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
