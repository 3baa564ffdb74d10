"""Replica-parallel map whose output never depends on the worker count.

Every task carries its own replica index and derives its random streams from
it, so the only job here is to return results in task order.
"""

import os
from concurrent.futures import ProcessPoolExecutor


def default_workers():
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def replica_map(fn, tasks, workers=1, chunksize=None):
    """``[fn(*task) for task in tasks]``, optionally spread over processes."""
    tasks = list(tasks)
    if workers is None:
        workers = default_workers()
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*task) for task in tasks]
    if chunksize is None:
        chunksize = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*tasks), chunksize=chunksize))
