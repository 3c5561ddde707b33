"""Optional thread pool for independent per-commodity work.

``FAIRFLOW_THREADS`` selects the worker count: unset or ``1`` runs serially,
``0`` picks ``min(cpu_count, len(items))``.
"""

from __future__ import annotations

import os
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

T = TypeVar("T")
R = TypeVar("R")


def worker_count(n_items: int) -> int:
    raw = os.environ.get("FAIRFLOW_THREADS", "1").strip() or "1"
    try:
        wanted = int(raw)
    except ValueError:
        return 1
    if wanted == 0:
        wanted = os.cpu_count() or 1
    return max(1, min(wanted, n_items))


def ordered_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    """``[fn(x) for x in items]``, possibly on threads; result order is preserved."""
    items = list(items)
    workers = worker_count(len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
