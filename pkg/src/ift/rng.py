"""Counter-based, splittable random number generation.

Built on numpy's Philox bit generator so that independent streams can be
derived from (master seed, stream index...) paths without any sequential
coupling: trial k of a scan gets the same draws no matter how many workers
run or in which order trials complete.
"""

from __future__ import annotations

import numpy as np


def generator(seed: int, *path: int) -> np.random.Generator:
    """Return a Generator for the stream identified by (seed, *path)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, *path))))


def derive_seed(seed: int, *path: int) -> int:
    """Collapse (seed, *path) to a single recordable integer seed.

    ``generator(derive_seed(s, i))`` and storing that integer lets a single
    recorded value reproduce the stream.
    """
    return int(np.random.SeedSequence((seed, *path)).generate_state(1, np.uint64)[0])
