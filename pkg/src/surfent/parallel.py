"""Deterministic chunked execution.

Work is always split at the same fixed chunk boundaries regardless of the
thread count, and results are returned in chunk order, so every reduction
performed by the caller sees bit-identical inputs for 1 or 64 threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, TypeVar

T = TypeVar("T")

CHUNK = 16384
_threads = 1


def set_threads(k: int) -> None:
    global _threads
    if k < 1:
        raise ValueError("thread count must be >= 1")
    _threads = int(k)


def get_threads() -> int:
    return _threads


def chunk_bounds(n_items: int, chunk: int = CHUNK) -> List[tuple]:
    return [(i, min(i + chunk, n_items)) for i in range(0, n_items, chunk)]


def chunked_map(fn: Callable[[int, int], T], n_items: int, chunk: int = CHUNK,
                threads: int | None = None) -> List[T]:
    """Apply ``fn(lo, hi)`` over fixed chunks; results in chunk order."""
    bounds = chunk_bounds(n_items, chunk)
    threads = _threads if threads is None else threads
    if threads <= 1 or len(bounds) <= 1:
        return [fn(lo, hi) for lo, hi in bounds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda b: fn(*b), bounds))
