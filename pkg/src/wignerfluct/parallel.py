"""Replica-parallel map with order-independent results.

Each replica derives its own generator from ``(master_seed, index, label)``,
so a result depends only on its index; collecting by index makes serial and
parallel runs identical.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

__all__ = ["replica_map", "default_workers"]


def default_workers() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def replica_map(fn: Callable[[int], object], indices: Sequence[int], workers: int = 1,
                chunksize: int | None = None) -> list:
    """``[fn(i) for i in indices]``, optionally spread over worker processes.

    ``fn`` must be picklable when ``workers > 1`` (a module-level function or
    a :func:`functools.partial` of one).
    """
    indices = list(indices)
    if workers <= 1 or len(indices) <= 1:
        return [fn(i) for i in indices]
    if chunksize is None:
        chunksize = max(1, len(indices) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, indices, chunksize=chunksize))
