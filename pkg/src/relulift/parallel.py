"""Internal parallelism cap.

``RELU_LIFT_THREADS`` bounds the worker count of every internal pool; the
default is sequential execution, which also guarantees bitwise-reproducible
outputs regardless of scheduling.
"""

import os
from concurrent.futures import ThreadPoolExecutor

ENV_VAR = "RELU_LIFT_THREADS"


def thread_cap():
    raw = os.environ.get(ENV_VAR)
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def map_indexed(fn, jobs):
    """Apply ``fn`` over ``jobs`` preserving order, threading only when the
    environment allows more than one worker."""
    jobs = list(jobs)
    cap = min(thread_cap(), len(jobs)) if jobs else 1
    if cap <= 1:
        return [fn(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=cap) as pool:
        return list(pool.map(fn, jobs))
