"""Command-line entry point: ``g3marb {arb,enumerate,oracle,trials,duel,bench}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .baseline import ConvergenceWarning, SolverConfig, solve_grid_oracle, solve_numerical
from .bench import run_bench
from .pool import (
    MarketPrices,
    PoolState,
    TradeSolution,
    raw_invariant_ratio,
    reduced_invariant_residual,
)
from .signatures import (
    MAX_COUNT,
    MAX_ENUMERATE,
    enumerate_signatures,
    find_best_trade,
    signature_count,
    signature_fraction,
)
from . import sim

EXIT_TRADE = 0
EXIT_INPUT = 1
EXIT_NO_ARB = 3


class InputError(Exception):
    pass


def _read_json(path, what):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"{what}: cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{what}: invalid JSON in {path}: {exc}") from None


def _load_instance(args):
    if not args.pool or not args.prices:
        raise InputError("--pool and --prices are required")
    try:
        pool = PoolState.from_dict(_read_json(args.pool, "pool"))
        prices = MarketPrices.from_dict(_read_json(args.prices, "prices"))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if pool.n_tokens != prices.n_tokens:
        raise InputError(f"prices: length {prices.n_tokens} does not match pool size {pool.n_tokens}")
    return pool, prices


def _solver_config(args, doc=None) -> SolverConfig:
    doc = dict(doc or {})
    if getattr(args, "seed", None) is not None:
        doc.setdefault("seed", args.seed)
    try:
        return SolverConfig.from_dict(doc)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _solution_doc(pool, sol: TradeSolution, method: str) -> dict:
    doc = sol.to_dict()
    doc["method"] = method
    if sol.is_zero:
        doc["reduced_residual"] = 0.0
    else:
        doc["reduced_residual"] = reduced_invariant_residual(pool, sol)
        doc["raw_invariant_ratio"] = raw_invariant_ratio(pool, sol.phi)
    return doc


def _emit(doc) -> None:
    # json writes floats with repr(), the shortest string that round-trips exactly
    print(json.dumps(doc, indent=2))


def cmd_arb(args) -> int:
    pool, prices = _load_instance(args)
    if args.method == "closed":
        sol = find_best_trade(pool, prices, threads=args.threads).best
    else:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            sol = solve_numerical(pool, prices, _solver_config(args))
    _emit(_solution_doc(pool, sol, args.method))
    return EXIT_TRADE if sol.profit > 0 else EXIT_NO_ARB


def cmd_oracle(args) -> int:
    pool, prices = _load_instance(args)
    try:
        sol = solve_grid_oracle(pool, prices, args.grid_points)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _emit(_solution_doc(pool, sol, "oracle"))
    return EXIT_TRADE if sol.profit > 0 else EXIT_NO_ARB


def cmd_enumerate(args) -> int:
    n = args.n
    if args.list:
        if not 2 <= n <= MAX_ENUMERATE:
            raise InputError(f"n: listing supports 2 <= n <= {MAX_ENUMERATE}")
        for row in enumerate_signatures(n).signatures:
            print(" ".join(f"{int(v):+d}" if v else "0" for v in row))
        return 0
    if not 2 <= n <= MAX_COUNT:
        raise InputError(f"n: counting supports 2 <= n <= {MAX_COUNT}")
    if args.fraction:
        print(f"{signature_fraction(n):.17g}")
    else:
        print(signature_count(n))
    return 0


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_trials(args) -> int:
    doc = _read_json(args.config, "config") if args.config else {}
    if args.seed is not None:
        doc["seed"] = args.seed
    for key in ("n_tokens", "n_trials", "shock_scale", "fee_gamma"):
        value = getattr(args, key)
        if value is not None:
            doc[key] = value
    try:
        cfg = sim.TrialConfig.from_dict(doc)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from None
    solver = _solver_config(args, doc.get("solver"))
    records = sim.run_trials(cfg, solver, workers=args.threads or 1)
    out = _out_dir(args)
    sim.write_records_csv(records, out / "trials.csv")
    summary = {"config": asdict(cfg), "solver": asdict(solver), **sim.summarize_trials(records)}
    sim.write_summary_json(summary, out / "trials_summary.json")
    _emit(summary)
    return 0


def cmd_duel(args) -> int:
    doc = _read_json(args.config, "config") if args.config else {}
    try:
        if args.series:
            series = sim.load_price_series(args.series)
        else:
            series = sim.synthetic_price_walk(
                int(doc.get("n_tokens", 3)), int(doc.get("n_steps", args.steps)),
                float(doc.get("volatility", 0.01)), args.seed if args.seed is not None else 0,
            )
        if args.pool:
            pool = PoolState.from_dict(_read_json(args.pool, "pool"))
        else:
            n = series.n_tokens
            pool = PoolState.at_equilibrium(
                series.prices[0], np.full(n, 1.0 / n),
                float(doc.get("pool_value", sim.DUEL_POOL_VALUE)),
                float(doc.get("fee_gamma", sim.DUEL_FEE_GAMMA)),
            )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    solver_doc = {**asdict(sim.DUEL_SOLVER), **doc.get("solver", {})}
    solver = _solver_config(args, solver_doc)
    baseline = sim.baseline_arb(solver)
    out = _out_dir(args)
    summary = {"priority": args.priority, "solver": asdict(solver)}
    records = sim.run_duel(series, pool, args.priority, baseline=baseline)
    sim.write_records_csv(records, out / "duel.csv")
    summary["duel"] = sim.summarize_duel(records)
    if args.standalone:
        for mode in ("closed_form_only", "baseline_only"):
            alone = sim.run_duel(series, pool, mode, baseline=baseline)
            sim.write_records_csv(alone, out / f"{mode}.csv")
            summary[mode] = sim.summarize_duel(alone)
    sim.write_summary_json(summary, out / "duel_summary.json")
    _emit(summary)
    return 0


def cmd_bench(args) -> int:
    lo, hi = args.n_min, args.n_max
    threads = [1, args.threads or os.cpu_count() or 1]
    methods = ["closed-form"] if args.method == "closed" else ["closed-form", "baseline"]
    try:
        records = run_bench(range(lo, hi + 1), methods, sorted(set(threads)), args.instances,
                            args.seed or 0, _solver_config(args))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = _out_dir(args)
    sim.write_records_csv(records, out / "bench.csv")
    summary = {"records": [asdict(r) for r in records]}
    sim.write_summary_json(summary, out / "bench_summary.json")
    _emit(summary)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="g3marb", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, instance=False):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        if instance:
            p.add_argument("--pool", help="pool JSON file")
            p.add_argument("--prices", help="prices JSON file")

    p = sub.add_parser("arb", help="best arbitrage trade for one pool")
    common(p, instance=True)
    p.add_argument("--method", choices=("closed", "baseline"), default="closed")
    p.set_defaults(func=cmd_arb)

    p = sub.add_parser("oracle", help="dense grid-search oracle (N <= 3)")
    common(p, instance=True)
    p.add_argument("--grid-points", type=int, default=2001)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("enumerate", help="count or list trade signatures")
    p.add_argument("n", type=int)
    p.add_argument("--list", action="store_true")
    p.add_argument("--fraction", action="store_true")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("trials", help="independent synthetic arbitrage trials")
    common(p)
    p.add_argument("--config", help="trial config JSON (fields of TrialConfig, optional 'solver' block)")
    p.add_argument("--n-tokens", dest="n_tokens", type=int)
    p.add_argument("--n-trials", dest="n_trials", type=int)
    p.add_argument("--shock-scale", dest="shock_scale", type=float)
    p.add_argument("--fee-gamma", dest="fee_gamma", type=float)
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=cmd_trials)

    p = sub.add_parser("duel", help="duelling arbitrageurs on a price series")
    common(p)
    p.add_argument("--pool", help="pool JSON file (default: equal-weight pool at equilibrium)")
    p.add_argument("--series", help="price CSV with header timestamp,token_0,...")
    p.add_argument("--config", help="duel config JSON")
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--priority", choices=("baseline", "closed_form"), default="baseline")
    p.add_argument("--standalone", action="store_true", help="also run each arbitrageur alone")
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=cmd_duel)

    p = sub.add_parser("bench", help="timing sweep over pool size")
    common(p)
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=7)
    p.add_argument("--instances", type=int, default=30)
    p.add_argument("--method", choices=("closed", "both"), default="both")
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
