"""Memory micro-benchmarks: streaming copy, random access, atomic adds.

The absolute numbers are machine-local; the orderings are what the
kernels' behavior follows: streaming moves far more bytes per second
than scattered access, and per-worker counters beat a shared contended
counter.
"""

from pathlib import Path

from slidepipe import bench_atomic_add, bench_random_access, bench_stream
from slidepipe.bench import append_report

out = Path("out/demo07")
out.mkdir(parents=True, exist_ok=True)
results = out / "bench.csv"

stream = bench_stream(array_bytes=64 * 1024 * 1024, workers=1)
print(f"stream copy:        {stream.throughput:10.0f} MB/s "
      f"[{stream.low:.0f} .. {stream.high:.0f}]")

for mode in ("read", "write"):
    r = bench_random_access(matrix_dim=4096, op_count=10_000_000, mode=mode, workers=1)
    append_report(r, results)
    print(f"random {mode:5s}:       {r.throughput:10.0f} MB/s "
          f"[{r.low:.0f} .. {r.high:.0f}]")

for mode in ("single_variable", "per_worker_array"):
    r = bench_atomic_add(mode=mode, op_count=1_000_000, workers=4)
    append_report(r, results)
    print(f"atomic {mode:17s}: {r.throughput:7.2f} Mops/s (total exact by construction)")

append_report(stream, results)
print(f"appended reports to {results}")
