"""Numerical baselines: a barrier projected-gradient solver and a dense grid oracle.

The solver works on the convex relaxation where every token may be both paid in and
withdrawn, and the trading function is an inequality::

    maximise   sum m (Lambda - Delta)
    subject to sum w log(nu R + gamma Delta - Lambda) >= sum w log(nu R),  Delta, Lambda >= 0

Variables are scaled by the virtual reserves and the objective by the pool value so
that one configuration works across pools of any size.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numba
import numpy as np

from .pool import (
    MarketPrices,
    PoolState,
    TradeSignature,
    TradeSolution,
    check_compatible,
    raw_invariant_ratio,
    trade_profit,
)
from .signatures import enumerate_signatures

MAX_ORACLE_TOKENS = 3
MAX_GRID_POINTS = 2001


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 5000
    step_size: float = 1.0
    penalty_weight: float = 1e-3
    convergence_tol: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        for name, value in asdict(self).items():
            if name == "seed":
                if value < 0:
                    raise ValueError("seed: must be non-negative")
            elif not value > 0:
                raise ValueError(f"{name}: must be positive, got {value!r}")
        if self.convergence_tol < 1e-12:
            raise ValueError("convergence_tol: must be at least 1e-12")

    @classmethod
    def from_dict(cls, doc: dict) -> "SolverConfig":
        known = {k: doc[k] for k in cls.__dataclass_fields__ if k in doc}
        unknown = set(doc) - set(known)
        if unknown:
            raise ValueError(f"solver: unknown field(s) {sorted(unknown)}")
        return cls(**known)


@numba.njit(cache=True)
def _constraint(x, y, w, gamma):
    g = 0.0
    for i in range(x.size):
        arg = 1.0 + gamma * x[i] - y[i]
        if arg <= 0.0:
            return -np.inf
        g += w[i] * math.log(arg)
    return g


@numba.njit(cache=True)
def _barrier_value(x, y, p, w, gamma, mu):
    g = _constraint(x, y, w, gamma)
    if not g > 0.0:
        return -np.inf
    f = 0.0
    for i in range(x.size):
        f += p[i] * (y[i] - x[i])
    return f + mu * math.log(g)


@numba.njit(cache=True)
def _barrier_grad(x, y, p, w, gamma, mu, gx, gy):
    g = _constraint(x, y, w, gamma)
    scale = mu / g
    for i in range(x.size):
        arg = 1.0 + gamma * x[i] - y[i]
        gx[i] = -p[i] + scale * w[i] * gamma / arg
        gy[i] = p[i] - scale * w[i] / arg


@numba.njit(cache=True)
def _project(x, y, y_cap):
    for i in range(x.size):
        if x[i] < 0.0:
            x[i] = 0.0
        if y[i] < 0.0:
            y[i] = 0.0
        if y[i] > y_cap[i]:
            y[i] = y_cap[i]


@numba.njit(cache=True)
def _stationarity(x, y, gx, gy, y_cap):
    # infinity norm of the projected-gradient step P(z + grad) - z
    r = 0.0
    for i in range(x.size):
        r = max(r, abs(max(x[i] + gx[i], 0.0) - x[i]))
        r = max(r, abs(min(max(y[i] + gy[i], 0.0), y_cap[i]) - y[i]))
    return r


@numba.njit(cache=True)
def _barrier_pga(p, w, gamma, y_cap, x0, max_iter, step0, mu0, tol, window=8):
    """Spectral projected gradient ascent on the log-barrier objective with mu continuation.

    Each barrier subproblem is solved until its projected gradient is below ``mu``; the
    barrier weight then shrinks tenfold. With a single barrier term the optimality gap of
    the subproblem solution is about ``mu`` (in pool-value units), so the loop stops once
    ``mu < tol``. Returns the best feasible iterate (profit, x, y), the iteration count and
    whether that point was reached within ``max_iter``.
    """
    n = p.size
    x = x0.copy()
    y = np.zeros(n)
    gx = np.empty(n)
    gy = np.empty(n)
    gx_new = np.empty(n)
    gy_new = np.empty(n)
    xt = np.empty(n)
    yt = np.empty(n)

    best_profit = 0.0
    best_x = np.zeros(n)
    best_y = np.zeros(n)

    mu = mu0
    alpha = step0
    converged = False
    _barrier_grad(x, y, p, w, gamma, mu, gx, gy)
    fval = _barrier_value(x, y, p, w, gamma, mu)
    # recent objective values for the non-monotone acceptance test
    recent = np.full(window, fval)
    it = 0
    while it < max_iter:
        if _stationarity(x, y, gx, gy, y_cap) <= mu:
            mu *= 0.1
            if mu < tol:
                converged = True
                break
            _barrier_grad(x, y, p, w, gamma, mu, gx, gy)
            fval = _barrier_value(x, y, p, w, gamma, mu)
            recent[:] = fval
            alpha = step0
            continue

        it += 1
        fref = recent.max()
        # backtracking along the projection arc
        t = alpha
        accepted = False
        for _ in range(80):
            for i in range(n):
                xt[i] = x[i] + t * gx[i]
                yt[i] = y[i] + t * gy[i]
            _project(xt, yt, y_cap)
            ft = _barrier_value(xt, yt, p, w, gamma, mu)
            if ft > -np.inf:
                dec = 0.0
                for i in range(n):
                    dec += gx[i] * (xt[i] - x[i]) + gy[i] * (yt[i] - y[i])
                if ft >= fref + 1e-4 * dec:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            # no ascent possible at machine precision: treat the subproblem as solved
            mu *= 0.1
            if mu < tol:
                converged = True
                break
            _barrier_grad(x, y, p, w, gamma, mu, gx, gy)
            fval = _barrier_value(x, y, p, w, gamma, mu)
            recent[:] = fval
            alpha = step0
            continue

        _barrier_grad(xt, yt, p, w, gamma, mu, gx_new, gy_new)
        ss = 0.0
        sy = 0.0
        move = 0.0
        size = 1.0
        for i in range(n):
            sx = xt[i] - x[i]
            sv = yt[i] - y[i]
            ss += sx * sx + sv * sv
            sy += sx * (gx_new[i] - gx[i]) + sv * (gy_new[i] - gy[i])
            move = max(move, abs(sx), abs(sv))
            size = max(size, abs(xt[i]), abs(yt[i]))
        for i in range(n):
            x[i] = xt[i]
            y[i] = yt[i]
            gx[i] = gx_new[i]
            gy[i] = gy_new[i]
        fval = ft
        recent[it % window] = ft

        profit = 0.0
        for i in range(n):
            profit += p[i] * (y[i] - x[i])
        if profit > best_profit:
            best_profit = profit
            best_x[:] = x
            best_y[:] = y

        # ascent on a concave objective: curvature s.y is negative
        if sy < 0.0:
            alpha = min(max(-ss / sy, 1e-14), 1e6)
        else:
            alpha = step0

        if move <= 1e-14 * size:
            # stalled at working precision: the subproblem cannot be refined further
            mu *= 0.1
            if mu < tol:
                converged = True
                break
            _barrier_grad(x, y, p, w, gamma, mu, gx, gy)
            fval = _barrier_value(x, y, p, w, gamma, mu)
            recent[:] = fval
            alpha = step0
    return best_profit, best_x, best_y, it, converged


@numba.njit(cache=True)
def _polish(x, y, w, gamma, y_cap):
    """Scale the withdrawals up until the trade sits on the level set (bisection)."""
    if not _constraint(x, y, w, gamma) > 0.0:
        return y
    hi = 1e300
    for i in range(y.size):
        if y[i] > 0.0:
            # stay inside both the real-reserve cap and the log domain
            hi = min(hi, y_cap[i] / y[i], (1.0 + gamma * x[i]) / y[i])
    if hi == 1e300 or hi <= 1.0:
        return y
    lo = 1.0
    yt = np.empty(y.size)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        for i in range(y.size):
            yt[i] = y[i] * mid
        if _constraint(x, yt, w, gamma) >= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * lo:
            break
    for i in range(y.size):
        yt[i] = y[i] * lo
    return yt


def solve_numerical(pool: PoolState, prices: MarketPrices, cfg: SolverConfig | None = None) -> TradeSolution:
    """Approximate optimal trade from the barrier projected-gradient baseline."""
    cfg = cfg or SolverConfig()
    check_compatible(pool, prices)
    m = prices.prices
    vr = pool.virtual_reserves
    value = float(np.dot(m, vr))
    p = m * vr / value
    # withdrawals are capped by the real reserves
    y_cap = (pool.reserves / vr) * (1.0 - 1e-12)
    rng = np.random.default_rng(cfg.seed)
    x0 = 1e-9 * (1.0 + rng.random(pool.n_tokens))

    _, x, y, iters, converged = _barrier_pga(
        p, pool.weights, pool.fee_gamma, y_cap, x0,
        cfg.max_iterations, cfg.step_size, cfg.penalty_weight, cfg.convergence_tol,
    )
    y = _polish(x, y, pool.weights, pool.fee_gamma, y_cap)
    if not converged:
        warnings.warn(
            f"barrier solver stopped after {iters} iterations without converging",
            ConvergenceWarning, stacklevel=2,
        )
    # net out round trips through the same token
    phi = (x - y) * vr
    profit = trade_profit(prices, phi)
    if profit <= 0:
        phi = np.zeros_like(phi)
        profit = 0.0
    sig = None
    if np.any(phi > 0) and np.any(phi < 0):
        sig = TradeSignature(np.sign(phi).astype(int))
    ratio = raw_invariant_ratio(pool, phi) if np.any(phi) else 1.0
    valid = bool(profit > 0 and ratio >= 1.0 - 1e-9)
    return TradeSolution(
        phi, sig, float(profit), float(ratio - 1.0), valid, converged,
        meta={"iterations": int(iters)},
    )


@numba.njit(cache=True)
def _grid_best(ax0, ax1, coef, m_last, vr_last, g_last, w_last, sign_last, last_bound):
    # coef rows: (weight, gamma**d / nu R, price) of the two free axes; a missing axis
    # is passed as ax1 = [0.0] with zero weight and price
    best, bi, bj, best_last = -np.inf, 0, 0, 0.0
    log1 = np.empty(ax1.size)
    for j in range(ax1.size):
        log1[j] = coef[1, 0] * math.log1p(coef[1, 1] * ax1[j])
    for i in range(ax0.size):
        log0 = coef[0, 0] * math.log1p(coef[0, 1] * ax0[i])
        cost0 = coef[0, 2] * ax0[i]
        for j in range(ax1.size):
            phi_last = vr_last * math.expm1(-(log0 + log1[j]) / w_last) / g_last
            if phi_last * sign_last < 0 or abs(phi_last) > last_bound:
                continue
            profit = -(cost0 + coef[1, 2] * ax1[j] + m_last * phi_last)
            if profit > best:
                best, bi, bj, best_last = profit, i, j, phi_last
    return best, bi, bj, best_last


def _oracle_signature(pool, m, sig, grid_points, refine, box):
    """Best point on the level set for one signature, by grid over the free tokens."""
    active = np.flatnonzero(sig)
    free, last = active[:-1], active[-1]
    vr = pool.virtual_reserves
    gamma_d = np.where(sig == 1, pool.fee_gamma, 1.0)
    w = pool.weights[active] / pool.weights[active].sum()
    coef = np.zeros((2, 3))
    coef[:free.size, 0] = w[:-1]
    coef[:free.size, 1] = gamma_d[free] / vr[free]
    coef[:free.size, 2] = m[free]
    lo = np.where(sig[free] == 1, 0.0, -box * pool.reserves[free])
    hi = np.where(sig[free] == 1, box * pool.reserves[free], 0.0)
    last_args = (m[last], vr[last], gamma_d[last], w[-1], float(sig[last]), box * pool.reserves[last])

    def evaluate(axes):
        padded = axes + [np.zeros(1)] * (2 - len(axes))
        best, i, j, phi_last = _grid_best(padded[0], padded[1], coef, *last_args)
        return best, [padded[0][i], padded[1][j]][:len(axes)], phi_last

    axes = [np.linspace(lo[k], hi[k], grid_points) for k in range(free.size)]
    best, point, phi_last = evaluate(axes)
    if refine and np.isfinite(best):
        cells = [(hi[k] - lo[k]) / (grid_points - 1) for k in range(free.size)]
        axes = [
            np.linspace(max(lo[k], point[k] - 2 * cells[k]), min(hi[k], point[k] + 2 * cells[k]), grid_points)
            for k in range(free.size)
        ]
        fine, fine_point, fine_last = evaluate(axes)
        if fine >= best:
            best, point, phi_last = fine, fine_point, fine_last
    phi = np.zeros(pool.n_tokens)
    phi[free] = point
    phi[last] = phi_last
    return best, phi


def solve_grid_oracle(pool: PoolState, prices: MarketPrices, grid_points: int = MAX_GRID_POINTS,
                      refine: bool = True, box: float = 0.5) -> TradeSolution:
    """Dense grid search over every signature, each trade completed onto the level set.

    Independent of the closed form: it never uses the optimality conditions, only the
    trading function.
    """
    check_compatible(pool, prices)
    if pool.n_tokens > MAX_ORACLE_TOKENS:
        raise ValueError(f"pool: grid oracle supports at most {MAX_ORACLE_TOKENS} tokens")
    if not 2 <= grid_points <= MAX_GRID_POINTS:
        raise ValueError(f"grid_points: must lie in [2, {MAX_GRID_POINTS}]")
    m = prices.prices
    best_profit, best_phi = 0.0, np.zeros(pool.n_tokens)
    for sig in enumerate_signatures(pool.n_tokens).signatures:
        profit, phi = _oracle_signature(pool, m, sig, grid_points, refine, box)
        if profit > best_profit:
            best_profit, best_phi = profit, phi
    if best_profit <= 0:
        return TradeSolution.zero(pool.n_tokens)
    sig = None
    if np.any(best_phi > 0) and np.any(best_phi < 0):
        sig = TradeSignature(np.sign(best_phi).astype(int))
    ratio = raw_invariant_ratio(pool, best_phi)
    return TradeSolution(best_phi, sig, trade_profit(prices, best_phi), ratio - 1.0, True)
