"""Run deeply recursive work on a thread with a large stack."""

from __future__ import annotations

import functools
import sys
import threading
from typing import Callable, TypeVar

T = TypeVar("T")

STACK_BYTES = 512 * 1024 * 1024
RECURSION_LIMIT = 400_000

_local = threading.local()


def run_deep(fn: Callable[..., T], *args, **kwargs) -> T:
    if getattr(_local, "deep", False):
        return fn(*args, **kwargs)
    box: dict = {}

    def body() -> None:
        _local.deep = True
        try:
            box["value"] = fn(*args, **kwargs)
        except BaseException as exc:  # re-raised on the calling thread
            box["error"] = exc

    old_size = threading.stack_size(STACK_BYTES)
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, RECURSION_LIMIT))
    try:
        worker = threading.Thread(target=body, name="filterbench-deep")
        worker.start()
    finally:
        threading.stack_size(old_size)
    worker.join()
    sys.setrecursionlimit(old_limit)
    if "error" in box:
        raise box["error"]
    return box["value"]


def deep(fn: Callable[..., T]) -> Callable[..., T]:
    """Decorator form of :func:`run_deep`."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        return run_deep(fn, *args, **kwargs)

    return wrapper
