from __future__ import annotations

import os
from collections.abc import Callable, Iterable
from concurrent.futures import ProcessPoolExecutor
from typing import TypeVar

T = TypeVar("T")
R = TypeVar("R")


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("CURVSCAPE_WORKERS", "1") or 1)
    return max(1, int(workers))


def parallel_map(fn: Callable[[T], R], items: Iterable[T], workers: int | None = 1) -> list[R]:
    """Order-preserving map, optionally over a process pool."""
    items = list(items)
    workers = resolve_workers(workers)
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))
