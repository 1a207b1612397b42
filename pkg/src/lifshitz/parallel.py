"""Ordered parallel map over independent work items.

Kernels release the GIL, so a thread pool gives real concurrency. Results are
always returned in input order, which keeps every aggregate independent of
scheduling. ``LIFSHITZ_THREADS`` overrides the worker count.
"""
import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "LIFSHITZ_THREADS"


def thread_count(requested=None):
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(ENV_THREADS)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def ordered_map(fn, items, threads=None):
    items = list(items)
    n = min(thread_count(threads), len(items))
    if n <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
