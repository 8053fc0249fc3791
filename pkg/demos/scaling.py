"""
How search time grows with pool size
====================================

The number of signatures grows like 3^N, and each one is a handful of vector
operations, so the search time tracks N 3^N once fixed overheads are paid.
"""

import math

from g3marb.bench import run_bench, scaling_slope

records = run_bench(range(2, 8), methods=("closed-form", "baseline"), threads=(1,), instances=30)
for r in records:
    print(f"N={r.n_tokens} {r.method:12s} median {r.median_time * 1e3:7.3f} ms  p95 {r.p95_time * 1e3:7.3f} ms")

print("closed-form ln-time slope for N >= 5:", round(scaling_slope(records, n_min=5), 3),
      " (ln 3 =", round(math.log(3), 3), ")")
