"""Deterministic random number generation.

Every stochastic component of the package draws from a generator built
here. Philox is counter-based and splittable, so identical seeds yield
identical streams across runs and platforms.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Return a seeded counter-based generator with a reproducible stream."""
    return np.random.Generator(np.random.Philox(int(seed)))
