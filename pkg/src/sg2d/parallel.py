"""Replica dispatch: independent workers, order-independent reduction.

Workers share nothing but the immutable task tuples; results are returned in
task order regardless of completion order, so parallel and serial runs
reduce to identical statistics.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def default_workers() -> int:
    env = os.environ.get("SG2D_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def replica_map(fn, tasks, workers: int | None = None):
    """Apply ``fn`` to each task, serially or across processes.

    ``fn`` must be a module-level callable (picklable).  Results come back
    in task order.
    """
    tasks = list(tasks)
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))
