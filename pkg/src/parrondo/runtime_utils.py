"""
Runtime configuration for replica parallelism.
"""
import os
import warnings

NUM_THREADS_ENV = "PARRONDO_NUM_THREADS"


def get_num_threads():
    """
    Default worker-thread count: PARRONDO_NUM_THREADS if set, otherwise the CPU count.

    Returns:
        int: number of worker threads (at least 1)
    """
    raw = os.environ.get(NUM_THREADS_ENV)
    if raw:
        try:
            value = int(raw)
        except ValueError:
            value = 0
        if value >= 1:
            return value
        warnings.warn(f"Ignoring {NUM_THREADS_ENV}={raw!r}; expected a positive integer")
    return os.cpu_count() or 1


def resolve_workers(requested=None, tasks=None):
    """
    Worker count for a pool running `tasks` jobs.

    Args:
        requested (int): explicit thread count (None uses get_num_threads())
        tasks (int): number of jobs; the pool never exceeds it

    Returns:
        int: number of workers
    """
    workers = requested if requested is not None else get_num_threads()
    if workers < 1:
        raise ValueError(f"Thread count must be positive, got {workers}")
    if tasks is not None:
        workers = max(1, min(workers, tasks))
    return workers
