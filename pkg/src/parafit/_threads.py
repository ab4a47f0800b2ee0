"""Thread-pool helpers.

Worker count comes from the PARAFIT_THREADS environment variable (positive
integer, default 1). Maps are order preserving and each item is processed by
a deterministic pure function, so results are identical for any thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def thread_count() -> int:
    raw = os.environ.get("PARAFIT_THREADS")
    if raw is None:
        return 1
    try:
        count = int(raw)
    except ValueError:
        raise ValueError(f"PARAFIT_THREADS must be a positive integer, got {raw!r}") from None
    if count < 1:
        raise ValueError(f"PARAFIT_THREADS must be a positive integer, got {raw!r}")
    return count


def ordered_map(func: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """Apply func to every item, preserving order, on thread_count() threads."""
    seq: Sequence[T] = list(items)
    workers = thread_count()
    if workers == 1 or len(seq) <= 1:
        return [func(item) for item in seq]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, seq))
