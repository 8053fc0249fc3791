"""Simulation protocols: independent synthetic arbitrage trials and duelling arbitrageurs."""

from __future__ import annotations

import csv
import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from datetime import datetime
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .baseline import ConvergenceWarning, SolverConfig, solve_numerical
from .pool import DomainError, MarketPrices, PoolState, apply_trade, raw_invariant_ratio, split_phi
from .signatures import find_best_trade


# Baseline accuracy used by the duelling protocol: the default stopping accuracy of a
# first-order conic solver, so the numerical arbitrageur misses sub-1e-4 opportunities.
DUEL_SOLVER = SolverConfig(convergence_tol=1e-4)
DUEL_FEE_GAMMA = 0.997
DUEL_POOL_VALUE = 1e6


class PriceSeriesError(ValueError):
    pass


@dataclass(frozen=True)
class TrialConfig:
    n_tokens: int = 3
    n_trials: int = 5000
    v0: float = 1000.0
    shock_scale: float = 0.05
    fee_gamma: float = 0.95
    weight_jitter: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.n_tokens < 2:
            raise ValueError("n_tokens: must be at least 2")
        if self.n_trials < 1:
            raise ValueError("n_trials: must be at least 1")
        if not self.v0 > 0:
            raise ValueError("v0: must be positive")
        if self.shock_scale < 0:
            raise ValueError("shock_scale: must be non-negative")
        if not 0 < self.fee_gamma <= 1:
            raise ValueError("fee_gamma: must lie in (0, 1]")
        # worst case jittered weight before renormalisation must stay positive
        if not 0 <= self.weight_jitter < 1.0 / self.n_tokens:
            raise ValueError(f"weight_jitter: must lie in [0, 1/n_tokens), got {self.weight_jitter!r}")

    @classmethod
    def from_dict(cls, doc: dict) -> "TrialConfig":
        known = {k: doc[k] for k in cls.__dataclass_fields__ if k in doc}
        unknown = set(doc) - set(known) - {"solver"}
        if unknown:
            raise ValueError(f"trials: unknown field(s) {sorted(unknown)}")
        return cls(**known)


@dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    closed_form_profit: float
    baseline_profit: float
    profit_gap: float
    closed_form_time: float
    baseline_time: float
    closed_form_signature: str = ""
    baseline_converged: bool = True
    error: str = ""


def _trial_rng(seed: int, trial_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, trial_id]))


def _open_unit(rng, size):
    # Uniform(0, 1) without the zero endpoint
    out = rng.random(size)
    while np.any(out == 0.0):
        out = np.where(out == 0.0, rng.random(size), out)
    return out


def generate_trial(cfg: TrialConfig, trial_id: int) -> tuple[PoolState, MarketPrices]:
    """One shocked instance: pool at equilibrium with prices ``m``, market moved to ``m + a u``."""
    rng = _trial_rng(cfg.seed, trial_id)
    n = cfg.n_tokens
    m = _open_unit(rng, n)
    w = 1.0 / n + cfg.weight_jitter * rng.uniform(-1.0, 1.0, n)
    w = w / w.sum()
    if np.any(w <= 0) or np.any(w >= 1):
        raise ValueError("weight_jitter: jittered weights left (0, 1)")
    pool = PoolState.at_equilibrium(m, w, cfg.v0, cfg.fee_gamma)
    u = rng.random(n)
    return pool, MarketPrices(m + cfg.shock_scale * u)


def run_trial(cfg: TrialConfig, trial_id: int, solver: SolverConfig | None = None) -> TrialRecord:
    try:
        pool, prices = generate_trial(cfg, trial_id)
        t0 = time.perf_counter()
        cf = find_best_trade(pool, prices, threads=1).best
        t1 = time.perf_counter()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            bl = solve_numerical(pool, prices, solver)
        t2 = time.perf_counter()
    except Exception as exc:  # recorded in-band, never aborts a batch
        return TrialRecord(trial_id, math.nan, math.nan, math.nan, math.nan, math.nan,
                           error=f"{type(exc).__name__}: {exc}")
    sig = "" if cf.signature is None else " ".join(str(int(v)) for v in cf.signature.entries)
    return TrialRecord(
        trial_id, cf.profit, bl.profit, cf.profit - bl.profit, t1 - t0, t2 - t1, sig, bl.converged,
    )


def run_trials(cfg: TrialConfig, solver: SolverConfig | None = None, workers: int = 1) -> list[TrialRecord]:
    ids = range(cfg.n_trials)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            records = list(ex.map(lambda i: run_trial(cfg, i, solver), ids))
    else:
        records = [run_trial(cfg, i, solver) for i in ids]
    return sorted(records, key=lambda r: r.trial_id)


def summarize_trials(records: Sequence[TrialRecord], abs_tol: float = 1e-6) -> dict:
    ok = [r for r in records if not r.error]
    gap = np.array([r.profit_gap for r in ok])
    cf = np.array([r.closed_form_profit for r in ok])
    bl = np.array([r.baseline_profit for r in ok])
    summary = {"n_trials": len(records), "n_failed": len(records) - len(ok)}
    if ok:
        summary.update({
            "mean_closed_form_profit": float(cf.mean()),
            "mean_baseline_profit": float(bl.mean()),
            "mean_profit_gap": float(gap.mean()),
            "gap_quantiles": dict(zip(
                ("q05", "q25", "q50", "q75", "q95"),
                np.quantile(gap, [0.05, 0.25, 0.5, 0.75, 0.95]).tolist(),
            )),
            "closed_form_weak_win_rate": float(np.mean(gap >= -abs_tol)),
            "closed_form_strict_win_rate": float(np.mean(gap > abs_tol)),
            "arb_rate_closed_form": float(np.mean(cf > 0)),
            "arb_rate_baseline": float(np.mean(bl > 0)),
            "median_closed_form_time": float(np.median([r.closed_form_time for r in ok])),
            "median_baseline_time": float(np.median([r.baseline_time for r in ok])),
        })
    return summary


@dataclass(frozen=True)
class PriceSeries:
    timestamps: tuple
    prices: np.ndarray

    def __post_init__(self):
        prices = np.array(self.prices, dtype=float)
        if prices.ndim != 2 or prices.shape[0] != len(self.timestamps):
            raise PriceSeriesError("prices: expected one row per timestamp")
        if np.any(~np.isfinite(prices)) or np.any(prices <= 0):
            raise PriceSeriesError("prices: all prices must be positive and finite")
        for k in range(1, len(self.timestamps)):
            if not self.timestamps[k] > self.timestamps[k - 1]:
                raise PriceSeriesError(f"timestamps: not strictly increasing at row {k}")
        prices.flags.writeable = False
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        object.__setattr__(self, "prices", prices)

    def __len__(self):
        return self.prices.shape[0]

    @property
    def n_tokens(self) -> int:
        return self.prices.shape[1]


def _parse_timestamp(text: str):
    try:
        return float(text)
    except ValueError:
        return datetime.fromisoformat(text.strip().replace("Z", "+00:00"))


def load_price_series(path, format: str = "csv") -> PriceSeries:
    """Read ``timestamp,token_0,...,token_{N-1}`` CSV; errors name the offending line."""
    if format != "csv":
        raise ValueError(f"format: only 'csv' is supported, got {format!r}")
    stamps, rows = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "timestamp" or len(header) < 3:
            raise PriceSeriesError(f"line 1: expected header 'timestamp,token_0,...', got {header!r}")
        n = len(header) - 1
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != n + 1:
                raise PriceSeriesError(f"line {line}: expected {n + 1} fields, got {len(row)}")
            try:
                ts = _parse_timestamp(row[0])
                values = [float(c) for c in row[1:]]
            except ValueError as exc:
                raise PriceSeriesError(f"line {line}: {exc}") from None
            if not all(math.isfinite(v) and v > 0 for v in values):
                raise PriceSeriesError(f"line {line}: prices must be positive and finite")
            if stamps:
                try:
                    increasing = ts > stamps[-1]
                except TypeError:
                    raise PriceSeriesError(f"line {line}: mixed timestamp formats") from None
                if not increasing:
                    raise PriceSeriesError(f"line {line}: timestamps must be strictly increasing")
            stamps.append(ts)
            rows.append(values)
    if not rows:
        raise PriceSeriesError("no data rows")
    return PriceSeries(tuple(stamps), np.array(rows))


def write_price_series(series: PriceSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp"] + [f"token_{i}" for i in range(series.n_tokens)])
        for ts, row in zip(series.timestamps, series.prices):
            stamp = ts.isoformat() if isinstance(ts, datetime) else repr(ts)
            writer.writerow([stamp] + [f"{v:.17g}" for v in row])


def synthetic_price_walk(n_tokens: int = 3, n_steps: int = 10_000, volatility: float = 0.01,
                         seed: int = 0, start=None) -> PriceSeries:
    """Independent driftless geometric random walks, one per token."""
    rng = np.random.default_rng(seed)
    start = np.ones(n_tokens) if start is None else np.asarray(start, dtype=float)
    shocks = volatility * rng.standard_normal((n_steps - 1, n_tokens)) - 0.5 * volatility**2
    log_path = np.vstack([np.zeros(n_tokens), np.cumsum(shocks, axis=0)])
    return PriceSeries(tuple(float(t) for t in range(n_steps)), start * np.exp(log_path))


Arbitrageur = Callable[[PoolState, MarketPrices], np.ndarray]


def closed_form_arb(threads: int = 1) -> Arbitrageur:
    def trade(pool, prices):
        return find_best_trade(pool, prices, threads=threads).best.phi
    trade.__name__ = "closed_form"
    return trade


def baseline_arb(cfg: SolverConfig | None = DUEL_SOLVER) -> Arbitrageur:
    def trade(pool, prices):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            return solve_numerical(pool, prices, cfg).phi
    trade.__name__ = "baseline"
    return trade


@dataclass(frozen=True)
class DuelRecord:
    step: int
    arb_a_profit: float
    arb_b_profit: float
    pool_reserves_after: np.ndarray
    arb_a_traded: bool = False
    arb_b_traded: bool = False
    fees_value: float = 0.0
    pool_value: float = 0.0


def _execute(pool: PoolState, prices: MarketPrices, phi) -> tuple[PoolState, float, float]:
    """Apply a proposed trade if it is still acceptable; returns (pool, profit, fee value)."""
    phi = np.asarray(phi, dtype=float)
    if not np.any(phi):
        return pool, 0.0, 0.0
    profit = -float(np.dot(prices.prices, phi))
    try:
        acceptable = raw_invariant_ratio(pool, phi) >= 1.0 - 1e-12
        new_pool = apply_trade(pool, phi)
    except DomainError:
        return pool, 0.0, 0.0
    if not (acceptable and profit > 0):
        return pool, 0.0, 0.0
    delta, _ = split_phi(phi)
    fee = (1.0 - pool.fee_gamma) * float(np.dot(prices.prices, delta))
    return new_pool, profit, fee


def run_duel(series: PriceSeries, pool: PoolState, priority: str = "baseline",
             closed_form: Optional[Arbitrageur] = None,
             baseline: Optional[Arbitrageur] = None) -> list[DuelRecord]:
    """Two arbitrageurs trade against one live pool every step, ``priority`` first.

    ``arb_a`` is always the closed-form arbitrageur and ``arb_b`` the baseline; profits are
    cumulative fractions of the pool value at the first price row. Either arbitrageur may be
    disabled by passing ``priority="closed_form_only"`` or ``"baseline_only"``.
    """
    if series.n_tokens != pool.n_tokens:
        raise ValueError(f"series: {series.n_tokens} tokens but pool has {pool.n_tokens}")
    closed_form = closed_form or closed_form_arb()
    baseline = baseline or baseline_arb()
    orders = {
        "baseline": ("b", "a"),
        "closed_form": ("a", "b"),
        "closed_form_only": ("a",),
        "baseline_only": ("b",),
    }
    if priority not in orders:
        raise ValueError(f"priority: expected one of {sorted(orders)}, got {priority!r}")
    arbs = {"a": closed_form, "b": baseline}
    initial_value = float(np.dot(series.prices[0], pool.reserves))
    cum = {"a": 0.0, "b": 0.0}
    fees = 0.0
    out = []
    for step in range(len(series)):
        prices = MarketPrices(series.prices[step])
        traded = {"a": False, "b": False}
        for who in orders[priority]:
            phi = arbs[who](pool, prices)
            pool, profit, fee = _execute(pool, prices, phi)
            if profit > 0:
                traded[who] = True
                cum[who] += profit / initial_value
                fees += fee / initial_value
        out.append(DuelRecord(
            step, cum["a"], cum["b"], pool.reserves.copy(), traded["a"], traded["b"], fees,
            float(np.dot(prices.prices, pool.reserves)) / initial_value,
        ))
    return out


def summarize_duel(records: Sequence[DuelRecord]) -> dict:
    last = records[-1]
    return {
        "steps": len(records),
        "closed_form_final_profit": last.arb_a_profit,
        "baseline_final_profit": last.arb_b_profit,
        "closed_form_trades": int(sum(r.arb_a_traded for r in records)),
        "baseline_trades": int(sum(r.arb_b_traded for r in records)),
        "fees_value": last.fees_value,
        "final_pool_value": last.pool_value,
        "closed_form_wins": bool(last.arb_a_profit >= last.arb_b_profit),
    }


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    if isinstance(v, np.ndarray):
        return " ".join(f"{x:.17g}" for x in v)
    return v


def write_records_csv(records, path) -> None:
    records = list(records)
    if not records:
        Path(path).write_text("")
        return
    names = list(asdict(records[0]).keys())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for r in records:
            writer.writerow([_fmt(getattr(r, k)) for k in names])


def write_summary_json(summary: dict, path) -> None:
    Path(path).write_text(json.dumps(summary, indent=2) + "\n")
