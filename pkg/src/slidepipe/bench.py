"""Device-characterization micro-benchmarks.

Three workloads mirror the latency classes the kernels stress:

* random access -- scattered reads or writes over a large int32 matrix,
  positions from a pre-generated index vector (excluded from timing);
* atomic add -- worker threads incrementing either one shared counter or
  one slot per worker, each increment under its counter's lock, so the
  final total is exact by construction;
* stream -- a STREAM-style copy kernel over an array far larger than any
  last-level cache.

Reported numbers are machine-local.  The only properties asserted by the
test-suite are qualitative orderings (streaming >= random write, per-worker
array >= shared counter) and exactness of the atomic totals.
"""

from __future__ import annotations

import json
import os
import platform
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "BenchReport",
    "access_indices",
    "bench_random_access",
    "bench_atomic_add",
    "bench_stream",
    "append_report",
]

_MIN_STABLE_OPS = 1_000_000  # below this, results are noise; we note it in the report

# Published characterization of 2013-era devices, for eyeballing reports.
# Context only: nothing here is ever asserted against local measurements.
REFERENCE_POINTS = {
    "random_access": (
        "context: one published device study measured random access at "
        "305 read / 74 write MB/s (multicore CPU), 399/16 (many-core "
        "coprocessor), 895/126 (discrete GPU)"
    ),
    "atomic_add": (
        "context: one published device study measured atomic adds at 134 "
        "(CPU), 55 (coprocessor), 693 (GPU) Mops/s on one shared variable, "
        "and 2200 / 906 / 38630 Mops/s on per-thread array slots"
    ),
    "stream_copy": (
        "context: one published device study measured streaming bandwidth "
        "of 78 GB/s (CPU), 160 GB/s (coprocessor), 148 GB/s (GPU)"
    ),
}


@dataclass(frozen=True)
class BenchReport:
    """One benchmark measurement with dispersion over repetitions."""

    name: str
    params: dict
    throughput: float  # median over repetitions
    unit: str
    repetitions: int
    low: float
    median: float
    high: float
    machine: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.repetitions < 3:
            raise ValueError("benchmarks need at least 3 repetitions")
        if not self.throughput > 0:
            raise ValueError("throughput must be positive")


def _machine() -> dict:
    return {"cpu_count": os.cpu_count() or 1, "platform": platform.platform()}


def _report(name, params, unit, samples) -> BenchReport:
    s = sorted(samples)
    med = s[len(s) // 2] if len(s) % 2 else 0.5 * (s[len(s) // 2 - 1] + s[len(s) // 2])
    return BenchReport(
        name=name,
        params=params,
        throughput=med,
        unit=unit,
        repetitions=len(s),
        low=s[0],
        median=med,
        high=s[-1],
        machine=_machine(),
    )


def access_indices(matrix_dim: int, op_count: int, seed: int = 0) -> np.ndarray:
    """Pre-generated random positions; deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, matrix_dim * matrix_dim, size=op_count, dtype=np.int64)


def _chunks(total: int, workers: int):
    step = total // workers
    extra = total % workers
    start = 0
    for i in range(workers):
        end = start + step + (1 if i < extra else 0)
        yield start, end
        start = end


def bench_random_access(
    matrix_dim: int = 4096,
    op_count: int = 10_000_000,
    mode: str = "read",
    workers: int = 1,
    seed: int = 0,
    repetitions: int = 3,
) -> BenchReport:
    """Scattered reads/writes of 4-byte elements over a matrix_dim^2 matrix."""
    if mode not in ("read", "write"):
        raise ValueError("mode must be 'read' or 'write'")
    if op_count < 1:
        raise ValueError("op_count must be >= 1")
    if matrix_dim < 1:
        raise ValueError("matrix_dim must be >= 1")
    try:
        matrix = np.arange(matrix_dim * matrix_dim, dtype=np.int32)
    except MemoryError as e:
        raise ValueError(f"matrix {matrix_dim}x{matrix_dim} too large for memory") from e
    idx = access_indices(matrix_dim, op_count, seed)
    sink = np.zeros(workers, dtype=np.int64)

    def run_read(w, lo, hi):
        sink[w] = matrix[idx[lo:hi]].sum(dtype=np.int64)

    def run_write(w, lo, hi):
        matrix[idx[lo:hi]] = w

    body = run_read if mode == "read" else run_write
    samples = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        if workers <= 1:
            body(0, 0, op_count)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(lambda a: body(*a), [(w, lo, hi) for w, (lo, hi) in enumerate(_chunks(op_count, workers))]))
        dt = time.perf_counter() - t0
        samples.append(op_count * 4 / dt / 1e6)
    params = {
        "matrix_dim": matrix_dim,
        "op_count": op_count,
        "mode": mode,
        "workers": workers,
        "seed": seed,
        "stable": op_count >= _MIN_STABLE_OPS,
    }
    return _report("random_access", params, "MB/s", samples)


def bench_atomic_add(
    mode: str = "single_variable",
    op_count: int = 1_000_000,
    workers: int = 1,
    repetitions: int = 3,
) -> BenchReport:
    """Lock-protected increments: one shared counter vs one slot per worker.

    Both modes run the identical increment loop; only counter ownership
    differs, so the measured gap is pure contention.  The summed total
    must equal op_count exactly or the run aborts.
    """
    if mode not in ("single_variable", "per_worker_array"):
        raise ValueError("mode must be 'single_variable' or 'per_worker_array'")
    if op_count < 1:
        raise ValueError("op_count must be >= 1")
    samples = []
    for _ in range(repetitions):
        if mode == "single_variable":
            cells = [0]
            locks = [threading.Lock()]
            owner = [0] * workers
        else:
            cells = [0] * workers
            locks = [threading.Lock() for _ in range(workers)]
            owner = list(range(workers))

        def body(w, lo, hi):
            cell = owner[w]
            lk = locks[cell]
            for _ in range(hi - lo):
                with lk:
                    cells[cell] += 1

        t0 = time.perf_counter()
        if workers <= 1:
            body(0, 0, op_count)
        else:
            threads = [
                threading.Thread(target=body, args=(w, lo, hi))
                for w, (lo, hi) in enumerate(_chunks(op_count, workers))
            ]
            for th in threads:
                th.start()
            for th in threads:
                th.join()
        dt = time.perf_counter() - t0
        total = sum(cells)
        if total != op_count:
            raise RuntimeError(f"atomicity violated: accumulated {total}, expected {op_count}")
        samples.append(op_count / dt / 1e6)
    params = {
        "mode": mode,
        "op_count": op_count,
        "workers": workers,
        "stable": op_count >= _MIN_STABLE_OPS,
    }
    return _report("atomic_add", params, "Mops/s", samples)


def bench_stream(
    array_bytes: int = 128 * 1024 * 1024, workers: int = 1, repetitions: int = 3
) -> BenchReport:
    """STREAM-style copy; counts bytes read + written (2x the array size).

    The default array is 128 MB, at least 4x any last-level cache we
    expect to meet.
    """
    if array_bytes < 1:
        raise ValueError("array size must be positive")
    n = array_bytes // 8
    src = np.full(n, 1.0)
    dst = np.zeros(n)
    bands = list(_chunks(n, workers))

    def copy_band(lo, hi):
        dst[lo:hi] = src[lo:hi]

    copy_band(0, n)  # first-touch warm-up
    samples = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        if workers <= 1:
            copy_band(0, n)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                list(pool.map(lambda b: copy_band(*b), bands))
        dt = time.perf_counter() - t0
        samples.append(2 * n * 8 / dt / 1e6)
    params = {"array_bytes": n * 8, "workers": workers}
    return _report("stream_copy", params, "MB/s", samples)


_CSV_HEADER = "name,unit,throughput,low,median,high,repetitions,cpu_count,params\n"


def append_report(report: BenchReport, path) -> None:
    """Append one report row; creates the file (with header for CSV) if new."""
    p = Path(path)
    if p.suffix == ".jsonl":
        with open(p, "a") as f:
            f.write(json.dumps(report.__dict__, default=str) + "\n")
        return
    new = not p.exists()
    with open(p, "a") as f:
        if new:
            f.write(_CSV_HEADER)
        params = json.dumps(report.params, sort_keys=True).replace('"', "'")
        f.write(
            f"{report.name},{report.unit},{report.throughput:.3f},{report.low:.3f},"
            f"{report.median:.3f},{report.high:.3f},{report.repetitions},"
            f"{report.machine.get('cpu_count', '')},\"{params}\"\n"
        )
