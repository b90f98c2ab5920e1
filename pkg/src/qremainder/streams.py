"""Seeded random streams.

One root ``SeedSequence`` per run; workers get children via ``spawn`` in a
fixed order, so results do not depend on how work is scheduled.
"""

import os

import numpy as np

THREADS_ENV = "QREMAINDER_THREADS"


def make_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(np.random.SeedSequence(seed))


def substreams(seed, count):
    """``count`` independent generators derived from ``seed``."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(c) for c in children]


def default_threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1
