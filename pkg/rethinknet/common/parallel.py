from typing import Callable, Iterable, List, Optional, TypeVar
import concurrent.futures
import logging
import os

logger = logging.getLogger(__name__)

T = TypeVar('T')
R = TypeVar('R')

THREADS_ENV = 'RETHINK_THREADS'


def get_num_workers(requested: Optional[int] = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    value = os.environ.get(THREADS_ENV)
    if value:
        try:
            return max(1, int(value))
        except ValueError:
            logger.warning("ignoring non-integer %s=%r", THREADS_ENV, value)
    return os.cpu_count() or 1


def parallel_map(fn: Callable[[T], R], items: Iterable[T],
        num_workers: Optional[int] = None) -> List[R]:
    """
    Order-preserving map over independent runs. Every run owns its model and
    generators, so results do not depend on the worker count.
    """
    items = list(items)
    num_workers = min(get_num_workers(num_workers), max(1, len(items)))
    if num_workers == 1:
        return [fn(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=num_workers) as executor:
        return list(executor.map(fn, items))
