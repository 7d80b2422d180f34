"""Order-preserving worker pool for sentence-level tasks."""

from __future__ import annotations

import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Optional, Sequence

THREADS_ENV = "GEDKIT_THREADS"

_shared: Any = None


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            n = 0
        if n >= 1:
            return n
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover - non-Linux
        return os.cpu_count() or 1


def _init(shared):
    global _shared
    _shared = shared


def _run(args):
    func, chunk = args
    return func(chunk, _shared)


def ordered_map(
    func: Callable[[Sequence[Any], Any], List[Any]],
    items: Sequence[Any],
    threads: Optional[int] = None,
    shared: Any = None,
    chunk_size: int = 512,
) -> List[Any]:
    """Apply ``func(chunk, shared)`` to contiguous chunks of ``items`` and
    concatenate the results in input order.

    ``shared`` is handed to each worker once (inherited through fork where
    available) rather than pickled per chunk.
    """
    n = threads if threads is not None else default_threads()
    if n < 1:
        raise ValueError("threads must be >= 1")
    items = list(items)
    if n == 1 or len(items) <= chunk_size:
        return func(items, shared) if items else []
    chunks = [items[k:k + chunk_size] for k in range(0, len(items), chunk_size)]
    methods = multiprocessing.get_all_start_methods()
    if "fork" in methods:
        ctx = multiprocessing.get_context("fork")
        global _shared
        previous = _shared
        _shared = shared
        try:
            with ProcessPoolExecutor(max_workers=n, mp_context=ctx) as pool:
                parts = list(pool.map(_run, [(func, c) for c in chunks]))
        finally:
            _shared = previous
    else:  # pragma: no cover - spawn platforms
        with ProcessPoolExecutor(max_workers=n, initializer=_init, initargs=(shared,)) as pool:
            parts = list(pool.map(_run, [(func, c) for c in chunks]))
    out: List[Any] = []
    for part in parts:
        out.extend(part)
    return out
