import logging
from concurrent.futures import Executor, Future, ProcessPoolExecutor, ThreadPoolExecutor
from contextlib import contextmanager
from threading import Lock
from typing import Callable, Optional

logger = logging.getLogger(__name__)


class SerialExecutor(Executor):
    """
    Executor running every task in the calling thread.

    Used when no pool is requested so that parameter sweeps follow the same
    code path serially and in parallel.
    """

    def __init__(self):
        self._shutdown = False
        self._lock = Lock()

    def map(self, fn: Callable, *iterables, timeout: float = None, chunksize: int = 1):
        return map(fn, *iterables)

    def submit(self, fn: Callable, *args, **kwargs) -> Future:
        with self._lock:
            if self._shutdown:
                raise RuntimeError("cannot schedule new futures after shutdown")

            future = Future()
            try:
                result = fn(*args, **kwargs)
            except BaseException as e:
                future.set_exception(e)
            else:
                future.set_result(result)

            return future

    def shutdown(self, wait: bool = True, *, cancel_futures: bool = False):
        with self._lock:
            self._shutdown = True


@contextmanager
def get_executor(name: Optional[str], max_workers: int = 1):
    """
    Context manager yielding an executor by name.

    Parameters
    ----------
    name : str or None
        ``serial`` (or None), ``thread_pool`` or ``process_pool``.
    max_workers : int
        Number of workers for the pools.

    Yields
    ------
    Executor
    """
    if name in (None, "serial"):
        yield SerialExecutor()
    elif name == "thread_pool":
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            yield executor
    elif name == "process_pool":
        with ProcessPoolExecutor(max_workers=max_workers) as executor:
            yield executor
    else:
        raise ValueError(f"Unknown executor: {name}")
