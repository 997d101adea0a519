"""Thread-pool map honouring the ``SML_THREADS`` worker cap."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def max_workers() -> int:
    raw = os.environ.get("SML_THREADS", "1")
    try:
        workers = int(raw)
    except ValueError:
        workers = 1
    return max(1, workers)


def pmap(func, items):
    """Order-preserving map; runs serially unless ``SML_THREADS`` > 1."""
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
