"""Thread-count control and an order-preserving parallel map.

Compiled kernels release the GIL, so threads give real parallelism. Results
come back in input order, and callers merge floats with ``math.fsum``, which
is exact and therefore independent of scheduling.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def thread_count() -> int:
    """Worker count: ``HOROLAB_THREADS`` if set, capped by the CPU count."""
    cpus = os.cpu_count() or 1
    raw = os.environ.get("HOROLAB_THREADS")
    if raw is None:
        return cpus
    try:
        k = int(raw)
    except ValueError:
        raise ValueError(f"HOROLAB_THREADS must be an integer, got {raw!r}") from None
    return max(1, min(k, cpus))


def pmap(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    items = list(items)
    k = min(thread_count(), len(items))
    if k <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=k) as ex:
        return list(ex.map(fn, items))
