"""
There are some changes since curio 1.0
This is a file for some wrappers to get back the old behavior or to make some things easier
"""
import os

import curio

import logger
from common import settings
from common.exceptions import ValidationError


class TaskGroupWrapper(curio.TaskGroup):
    """
    Raise exception if one task failed
    Look https://github.com/dabeaz/curio/issues/314
    """
    async def __aexit__(self, ty, val, tb):
        result = await super().__aexit__(ty, val, tb)
        if not val:
            list_exceptions = [exception for exception in getattr(self, "exceptions", []) if exception is not None]
            if list_exceptions:
                if len(list_exceptions) > 1:
                    logger.warn(f"There are more than 1 exceptions: {len(list_exceptions)}. Only raising first")
                raise list_exceptions[0]
        return result


def worker_count() -> int:
    """
    Number of worker threads for fan-out work: GRIDFILL_THREADS if set, else Settings().Runtime.Threads
    """
    value = os.environ.get("GRIDFILL_THREADS")
    if value is None:
        value = settings.Settings().Runtime.Threads
    try:
        count = int(value)
    except (TypeError, ValueError) as e:
        raise ValidationError(f"GRIDFILL_THREADS must be a positive integer, got {value!r}") from e
    if count < 1:
        raise ValidationError(f"GRIDFILL_THREADS must be a positive integer, got {count}")
    return count


async def map_in_threads(function, items, max_workers):
    """
    Runs function on every item in curio worker threads, at most max_workers at a time

    :return: results in the order of items, whatever order the threads finished in
    """
    semaphore = curio.Semaphore(max_workers)
    results = [None] * len(items)

    async def run_one(index, item):
        async with semaphore:
            results[index] = await curio.run_in_thread(function, item)

    async with TaskGroupWrapper() as g:
        for index, item in enumerate(items):
            await g.spawn(run_one, index, item)
    return results


def parallel_map(function, items, max_workers=None) -> list:
    """
    Synchronous entry: maps function over items, in threads if more than one worker is allowed.
    Results keep item order so every reduction over them stays deterministic
    """
    items = list(items)
    if max_workers is None:
        max_workers = worker_count()
    if max_workers <= 1 or len(items) <= 1:
        return [function(item) for item in items]
    try:
        return curio.run(map_in_threads, function, items, max_workers)
    except curio.TaskError as e:
        raise e.__cause__ from e
