"""Reproducible random streams.

All randomness in the package flows through Philox, a counter-based 64-bit
generator whose output is identical across platforms.  Streams are keyed by
small integer tuples (seed, purpose, iteration, ...) hashed through
``numpy.random.SeedSequence``, so independent consumers never share state.
"""

from __future__ import annotations

import numpy as np


def stream(*key: int) -> np.random.Generator:
    """Return a fresh generator for the given integer key tuple."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(key))))
