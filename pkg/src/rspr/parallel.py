"""Order-preserving parallel map over pair-level work.

Workers are forked so they inherit read-only state (graphs, caches) without
pickling it; results come back in input order, so output never depends on
the worker count.
"""

from __future__ import annotations

import multiprocessing as mp
import os
from typing import Callable, Iterable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")

_SHARED: dict = {}


def default_threads() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:  # pragma: no cover - non-Linux
        return max(1, os.cpu_count() or 1)


def shared(name: str):
    return _SHARED[name]


def parallel_map(func: Callable[[T], R], items: Sequence[T] | Iterable[T], threads: int = 1, **state) -> list[R]:
    """``[func(x) for x in items]``, spread over ``threads`` forked workers.

    Keyword ``state`` is published to workers through :func:`shared`.
    """
    items = list(items)
    _SHARED.update(state)
    try:
        if threads <= 1 or len(items) < 2 or "fork" not in mp.get_all_start_methods():
            return [func(x) for x in items]
        ctx = mp.get_context("fork")
        chunk = max(1, len(items) // (threads * 8))
        with ctx.Pool(threads) as pool:
            return pool.map(func, items, chunksize=chunk)
    finally:
        for k in state:
            _SHARED.pop(k, None)
