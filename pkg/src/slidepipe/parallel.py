"""Row-band work partitioning shared by the data-parallel kernels.

Workers are plain threads; the kernels only touch numpy arrays inside each
band, so the interpreter lock is released for the bulk of the work.  Bands
are disjoint output rows, which keeps results bit-identical for any worker
count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

DEFAULT_WORKERS_ENV = "SLIDEPIPE_WORKERS"


def default_workers() -> int:
    v = os.environ.get(DEFAULT_WORKERS_ENV)
    if v:
        try:
            return max(1, int(v))
        except ValueError:
            pass
    return 1


def resolve_workers(workers) -> int:
    if workers is None:
        return default_workers()
    if workers < 1:
        raise ValueError("worker count must be >= 1")
    return int(workers)


def row_bands(height: int, workers: int):
    """Split [0, height) into at most `workers` contiguous bands."""
    n = min(workers, height)
    step = height // n
    extra = height % n
    y0 = 0
    for i in range(n):
        y1 = y0 + step + (1 if i < extra else 0)
        yield y0, y1
        y0 = y1


def run_banded(fn, height: int, workers: int) -> None:
    """Run fn(y0, y1) over row bands, threaded when workers > 1."""
    if workers <= 1 or height < 2 * workers:
        fn(0, height)
        return
    bands = list(row_bands(height, workers))
    with ThreadPoolExecutor(max_workers=len(bands)) as pool:
        for f in [pool.submit(fn, y0, y1) for y0, y1 in bands]:
            f.result()
