"""Chunked max-reductions over index ranges.

The result never depends on ``jobs``: max is associative and commutative
and the chunk boundaries only change the order of an exact reduction.
"""

import os
from concurrent.futures import ThreadPoolExecutor

_DEFAULT_JOBS = None


def default_jobs():
    return _DEFAULT_JOBS or os.cpu_count() or 1


def set_default_jobs(jobs):
    global _DEFAULT_JOBS
    _DEFAULT_JOBS = None if jobs is None else max(1, int(jobs))


def chunk_bounds(n, jobs):
    jobs = max(1, min(int(jobs), n)) if n else 1
    step, extra = divmod(n, jobs)
    bounds, start = [], 0
    for k in range(jobs):
        stop = start + step + (1 if k < extra else 0)
        bounds.append((start, stop))
        start = stop
    return bounds


def max_reduce(fn, n, jobs=None):
    """``max(fn(start, stop))`` over a partition of ``range(n)``; 0.0 if n == 0."""
    jobs = default_jobs() if jobs is None else jobs
    bounds = [b for b in chunk_bounds(n, jobs) if b[1] > b[0]]
    if not bounds:
        return 0.0
    if len(bounds) == 1:
        return float(fn(*bounds[0]))
    with ThreadPoolExecutor(max_workers=len(bounds)) as pool:
        return float(max(pool.map(lambda b: fn(*b), bounds)))
