"""Counter-keyed random streams for reproducible, schedule-independent Monte Carlo.

Every block of replicates draws from its own PCG64 generator whose state is
derived from ``SeedSequence(seed, spawn_key=(tag, block_index))``. A block's
draws therefore depend only on (seed, tag, block index), never on which
worker ran it or in what order, and per-block partial results are combined
in block order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

T = TypeVar("T")

_MASK64 = (1 << 64) - 1


def stream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def child_seed(seed: int, *key: int) -> int:
    ss = np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def blocks(total: int, size: int) -> list[tuple[int, int]]:
    """Split ``total`` replicates into (block_index, count) pairs."""
    return [(i, min(size, total - start)) for i, start in enumerate(range(0, total, size))]


def map_blocks(fn: Callable[[int, int], T], total: int, size: int, workers: int = 1) -> list[T]:
    """Apply ``fn(block_index, count)`` to every block; results come back in block order."""
    work = blocks(total, size)
    if workers <= 1 or len(work) <= 1:
        return [fn(i, c) for i, c in work]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda ic: fn(*ic), work))
