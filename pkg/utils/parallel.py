"""
Row-parallel helpers.

Work is split into contiguous chunks and results are concatenated in chunk
order, so the output never depends on the worker schedule.
"""
from typing import Callable, List, Sequence, TypeVar

import numpy as np
from joblib import Parallel, delayed

from config.manager import settings

T = TypeVar("T")


def chunk_ranges(n: int, chunk: int) -> List[range]:
    """Split ``range(n)`` into consecutive ranges of at most ``chunk`` items."""
    chunk = max(int(chunk), 1)
    return [range(start, min(start + chunk, n)) for start in range(0, n, chunk)]


def map_chunks(func: Callable[[Sequence[int]], T], n: int, chunk: int) -> List[T]:
    """
    Apply ``func`` to every chunk of ``range(n)``.

    Args:
        func: receives the indices of one chunk.
        n: total number of rows.
        chunk: rows per task.

    Returns:
        List of per-chunk results, in chunk order.
    """
    ranges = chunk_ranges(n, chunk)
    n_jobs = settings.thread_count()
    if n_jobs == 1 or len(ranges) <= 1:
        return [func(r) for r in ranges]
    return Parallel(n_jobs=n_jobs, prefer="threads")(delayed(func)(r) for r in ranges)


def stack_rows(func: Callable[[Sequence[int]], np.ndarray], n: int, chunk: int) -> np.ndarray:
    """Row-parallel build of an ``n x ...`` array from per-chunk blocks."""
    blocks = map_chunks(func, n, chunk)
    if not blocks:
        return np.empty((0,))
    return np.vstack(blocks)
