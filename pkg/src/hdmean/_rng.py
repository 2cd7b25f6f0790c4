"""Deterministic random-number substreams and index sampling.

Every source of randomness in the package is keyed: a tuple of non-negative
integers maps to an independent generator via ``numpy.random.SeedSequence``.
Keys are structured as (user seed, replicate index, ...), so results never
depend on evaluation order or on how work is scheduled across threads.
"""

from __future__ import annotations

import numpy as np


def substream(*key: int) -> np.random.Generator:
    """Independent Generator for an integer key tuple.

    Tuples of different lengths map to distinct streams, so e.g. ``(seed,)``
    and ``(seed, 0)`` never collide.
    """
    return np.random.default_rng(np.random.SeedSequence(list(key)))


def derive_seed(*key: int) -> int:
    """Collapse an integer key tuple into a single 63-bit seed.

    Lets components that take one scalar seed participate in the keyed
    hierarchy (e.g. one seed per scenario × replicate × test).
    """
    state = np.random.SeedSequence(list(key)).generate_state(1, np.uint64)[0]
    return int(state >> np.uint64(1))


def draw_index_sets(rng: np.random.Generator, n_items: int, size: int, count: int = 1) -> np.ndarray:
    """Draw `count` sets of `size` distinct integers from [0, n_items).

    Partial Fisher-Yates shuffle, vectorized across the `count` draws; each
    returned row is sorted. Sorting is safe because every consumer is
    order-invariant in the index set, and it makes the full-dimensional draw
    (size == n_items) the identity.
    """
    if not 1 <= size <= n_items:
        raise ValueError(f"need 1 <= size <= n_items, got size={size}, n_items={n_items}")
    idx = np.tile(np.arange(n_items, dtype=np.int64), (count, 1))
    rows = np.arange(count)
    for j in range(size):
        r = rng.integers(j, n_items, size=count)
        picked = idx[rows, r]
        idx[rows, r] = idx[rows, j]
        idx[rows, j] = picked
    out = idx[:, :size].copy()
    out.sort(axis=1)
    return out


def complement_indices(selected: np.ndarray, n_items: int) -> np.ndarray:
    """Sorted indices in [0, n_items) that are not in `selected`."""
    mask = np.ones(n_items, dtype=bool)
    mask[selected] = False
    return np.flatnonzero(mask).astype(np.int64)
