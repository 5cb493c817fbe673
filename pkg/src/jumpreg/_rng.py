"""Seedable, splittable random streams.

A seed is either an integer or a tuple ``(entropy, k1, k2, ...)``.  The
trailing integers form a spawn key, so ``substream((s, 3), 7)`` and
``substream(s, 3, 7)`` produce the same generator.  Streams with distinct
keys are statistically independent.
"""

from __future__ import annotations

from collections.abc import Sequence
from typing import Union

import numpy as np

Seed = Union[int, Sequence[int]]


def split_seed(seed: Seed) -> tuple[int, tuple[int, ...]]:
    if isinstance(seed, (int, np.integer)):
        entropy, key = int(seed), ()
    else:
        seq = [int(s) for s in seed]
        if not seq:
            raise ValueError("empty seed tuple")
        entropy, key = seq[0], tuple(seq[1:])
    if entropy < 0 or any(k < 0 for k in key):
        raise ValueError("seeds must be nonnegative integers")
    return entropy, key


def child_seed(seed: Seed, *key: int) -> tuple[int, ...]:
    entropy, prefix = split_seed(seed)
    return (entropy, *prefix, *(int(k) for k in key))


def substream(seed: Seed, *key: int) -> np.random.Generator:
    entropy, prefix = split_seed(seed)
    ss = np.random.SeedSequence(entropy=entropy, spawn_key=prefix + tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
