"""Deterministic worker pool over path indices.

Work is cut into fixed-size chunks of consecutive indices and results come
back in chunk order, so the output never depends on the number of threads.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

THREADS_ENV = "MANIFOLD_ROLLER_THREADS"
CHUNK_SIZE = 512


def default_threads() -> int:
    """MANIFOLD_ROLLER_THREADS if set, otherwise the available parallelism."""
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def chunks(n: int, chunk_size: int = CHUNK_SIZE):
    return [np.arange(a, min(a + chunk_size, n)) for a in range(0, n, chunk_size)]


def chunked_map(fn, n: int, threads: int | None = None, chunk_size: int = CHUNK_SIZE) -> list:
    """[fn(indices) for each chunk], evaluated on ``threads`` workers."""
    threads = default_threads() if threads is None else max(1, int(threads))
    parts = chunks(n, chunk_size)
    if threads == 1 or len(parts) == 1:
        return [fn(c) for c in parts]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, parts))
