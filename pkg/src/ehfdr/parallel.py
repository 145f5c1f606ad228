"""Worker-count policy and an order-preserving parallel map."""

import os
from concurrent.futures import ThreadPoolExecutor

from .errors import ConfigError

THREADS_ENV = "EHFDR_THREADS"


def worker_count(requested=None):
    """Number of worker threads to use.

    ``requested`` wins when given; otherwise ``EHFDR_THREADS`` caps the
    count, falling back to the CPU count.
    """
    if requested is not None:
        n = int(requested)
    else:
        raw = os.environ.get(THREADS_ENV, "").strip()
        if raw:
            try:
                n = int(raw)
            except ValueError:
                raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
        else:
            n = os.cpu_count() or 1
    if n < 1:
        raise ConfigError(f"worker count must be positive, got {n}")
    return n


def ordered_map(func, items, workers=None):
    """``[func(item) for item in items]``, possibly evaluated on threads.

    Results come back in input order, so any reduction over them is
    independent of the worker count.
    """
    items = list(items)
    n = min(worker_count(workers), max(len(items), 1))
    if n == 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(func, items))
