from collections.abc import Callable, Sequence
from typing import TypeVar

import anyio
import anyio.to_thread
from exceptiongroup import ExceptionGroup

T = TypeVar("T")

DEFAULT_CONCURRENCY = 4


async def _gather(jobs: Sequence[Callable[[], T]], limit: int) -> list[T]:
    results: list = [None] * len(jobs)
    limiter = anyio.CapacityLimiter(limit)

    async def worker(index: int, job: Callable[[], T]):
        results[index] = await anyio.to_thread.run_sync(job, limiter=limiter)

    try:
        async with anyio.create_task_group() as tg:
            for index, job in enumerate(jobs):
                tg.start_soon(worker, index, job)
    except ExceptionGroup as eg:
        # all jobs are independent, the first failure is the one to report
        raise eg.exceptions[0]
    return results


def run_concurrently(jobs: Sequence[Callable[[], T]], limit: int = DEFAULT_CONCURRENCY) -> list[T]:
    """Runs independent blocking jobs in worker threads and returns their results in the order of the jobs

    Args:
        jobs: callables without arguments
        limit: maximal number of jobs running at the same time; 1 runs them sequentially in the caller's thread

    Returns:
        The results, job by job

    Example:
    >>> run_concurrently([lambda: 1, lambda: 2, lambda: 3], limit=2)
    [1, 2, 3]
    """
    if not jobs:
        return []
    if limit <= 1:
        return [job() for job in jobs]
    return anyio.run(_gather, list(jobs), limit)
