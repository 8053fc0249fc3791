"""Timing sweep of closed-form search against the numerical baseline."""

from __future__ import annotations

import os
import time
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .baseline import ConvergenceWarning, SolverConfig, solve_numerical
from .signatures import find_best_trade
from .sim import TrialConfig, generate_trial

MIN_INSTANCES = 30


@dataclass(frozen=True)
class BenchRecord:
    n_tokens: int
    method: str
    threads: int
    median_time: float
    p95_time: float
    instances: int


def _time_once(fn, *args) -> float:
    t0 = time.perf_counter()
    fn(*args)
    return time.perf_counter() - t0


def run_bench(
    n_values: Iterable[int] = range(2, 8),
    methods: Sequence[str] = ("closed-form", "baseline"),
    threads: Sequence[int] | None = None,
    instances: int = MIN_INSTANCES,
    seed: int = 0,
    solver: SolverConfig | None = None,
    repeats: int = 3,
) -> list[BenchRecord]:
    """Median and 95th-percentile wall time per optimal-trade computation.

    Each instance is timed ``repeats`` times and the fastest run kept, which filters
    scheduler noise without hiding the per-instance cost.
    """
    if instances < MIN_INSTANCES:
        raise ValueError(f"instances: need at least {MIN_INSTANCES}, got {instances}")
    threads = tuple(threads) if threads else tuple(sorted({1, os.cpu_count() or 1}))
    records = []
    for n in n_values:
        cfg = TrialConfig(n_tokens=n, n_trials=instances, shock_scale=0.05, seed=seed)
        cases = [generate_trial(cfg, i) for i in range(instances)]
        for method in methods:
            if method == "closed-form":
                for t in threads:
                    find_best_trade(*cases[0], threads=t)  # warm caches
                    times = [min(_time_once(find_best_trade, pool, prices, t) for _ in range(repeats))
                             for pool, prices in cases]
                    records.append(_record(n, method, t, times))
            elif method == "baseline":
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", ConvergenceWarning)
                    solve_numerical(*cases[0], solver)
                    times = [min(_time_once(solve_numerical, pool, prices, solver) for _ in range(repeats))
                             for pool, prices in cases]
                records.append(_record(n, method, 1, times))
            else:
                raise ValueError(f"method: unknown {method!r}")
    return records


def _record(n, method, threads, times) -> BenchRecord:
    times = np.asarray(times)
    return BenchRecord(n, method, threads, float(np.median(times)),
                       float(np.percentile(times, 95)), len(times))


def scaling_slope(records: Sequence[BenchRecord], method: str = "closed-form", threads: int = 1,
                  n_min: int = 2) -> float:
    """Least-squares slope of ln(median time) against N."""
    pts = sorted((r.n_tokens, r.median_time) for r in records
                 if r.method == method and r.threads == threads and r.n_tokens >= n_min)
    n = np.array([p[0] for p in pts], dtype=float)
    t = np.log([p[1] for p in pts])
    return float(np.polyfit(n, t, 1)[0])
