from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

ENV_THREADS = "NATSTEGO_THREADS"


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get(ENV_THREADS, "1") or 1)
    return max(1, int(threads))


def row_chunks(n_rows: int, threads: int) -> list[slice]:
    n = max(1, min(threads, n_rows))
    bounds = np.linspace(0, n_rows, n + 1).astype(int)
    return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def map_rows(fn, n_rows: int, threads: int | None = 1) -> list:
    """Apply ``fn(row_slice)`` over row chunks, results in row order."""
    threads = resolve_threads(threads)
    chunks = row_chunks(n_rows, threads)
    if len(chunks) <= 1:
        return [fn(c) for c in chunks] if chunks else []
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        return list(pool.map(fn, chunks))
