"""Worker-pool sizing and an order-preserving parallel map."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

ENV_THREADS = "MICFLOW_THREADS"

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: int | None = None) -> int:
    """Explicit value, else ``$MICFLOW_THREADS``, else 1."""
    if threads is None:
        raw = os.environ.get(ENV_THREADS, "").strip()
        if not raw:
            return 1
        try:
            threads = int(raw)
        except ValueError:
            raise ValueError(f"{ENV_THREADS} must be an integer, got {raw!r}") from None
    if threads < 1:
        raise ValueError("thread count must be >= 1")
    return threads


def pmap(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """``[fn(x) for x in items]``, run on up to ``threads`` workers.

    Results keep input order, so anything seeded per item is independent of
    scheduling.  The numeric kernels release the GIL.
    """
    items = list(items)
    workers = min(resolve_threads(threads), max(len(items), 1))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
