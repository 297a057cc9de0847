"""Fixed-size row chunking with order-preserving, optionally threaded execution.

Reductions that combine chunk results MUST do so in list order (ascending
chunk index). That convention, not the thread count, is what makes every
computation in this package bitwise-stable across --threads settings.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

DEFAULT_CHUNK_ROWS = 4096

T = TypeVar("T")


def chunk_ranges(n_rows: int, chunk_rows: int = DEFAULT_CHUNK_ROWS) -> list[tuple[int, int]]:
    """Split [0, n_rows) into [start, stop) ranges of at most chunk_rows rows."""
    if chunk_rows < 1:
        raise ValueError(f"chunk_rows must be >= 1, got {chunk_rows}")
    return [(s, min(s + chunk_rows, n_rows)) for s in range(0, n_rows, chunk_rows)]


def map_chunks(
    fn: Callable[[int, int], T],
    ranges: list[tuple[int, int]],
    threads: int = 1,
) -> list[T]:
    """Apply fn(start, stop) to every range, returning results in range order."""
    if threads <= 1 or len(ranges) <= 1:
        return [fn(s, e) for s, e in ranges]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda r: fn(r[0], r[1]), ranges))
