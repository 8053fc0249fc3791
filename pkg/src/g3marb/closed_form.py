"""Closed-form optimal arbitrage trade for a fixed trade signature.

For a signature ``s`` with active set ``A`` and fee indicator ``d = (s == +1)``, the
optimal net trade on every active token is

    phi_i = gamma**-d_i * (nu * k_breve * (w_i gamma**d_i / m_i) ** (1 - w_i)
                           * prod_{j != i} (m_j / (w_j gamma**d_j)) ** w_j  -  nu * R_i)

with ``w`` renormalised over ``A`` and ``k_breve = prod_A R_i ** w_i``.  Writing
``c_j = ln m_j - ln w_j - d_j ln gamma`` the bracketed product collapses to
``exp(sum_A w_j c_j - c_i)``, which is what the batch kernel evaluates.

The kernels work on a whole matrix of signatures at once (one row per signature) so
that the search over signatures is a single vectorised pass per chunk.
"""

from __future__ import annotations

import numpy as np

from .pool import (
    RESIDUAL_TOL,
    DomainError,
    MarketPrices,
    PoolState,
    TradeSignature,
    TradeSolution,
    check_compatible,
    trade_profit,
)

ZERO_EPS = 1e-12


def _active_weight_matrix(weights, signatures):
    active = signatures != 0
    w = np.where(active, weights, 0.0)
    return active, w / w.sum(axis=1, keepdims=True)


def _log_price_terms(prices, w_breve, active, fee_in, gamma):
    # c_j = ln m_j - ln w_j - d_j ln gamma on active tokens, 0 elsewhere
    with np.errstate(divide="ignore"):
        log_w = np.log(w_breve)
    c = np.log(prices) - log_w - fee_in * np.log(gamma)
    return np.where(active, c, 0.0)


def closed_form_batch(reserves, weights, gamma, prices, signatures, amplification=1.0):
    """Optimal ``phi`` for every row of ``signatures`` (shape ``(M, N)``)."""
    signatures = np.atleast_2d(signatures)
    active, w_breve = _active_weight_matrix(weights, signatures)
    fee_in = signatures == 1
    c = _log_price_terms(prices, w_breve, active, fee_in, gamma)
    total = np.sum(w_breve * c, axis=1, keepdims=True)
    # amplification enters only through the virtual reserves nu R
    vr = amplification * reserves
    log_k_breve = np.sum(np.where(active, w_breve * np.log(vr), 0.0), axis=1, keepdims=True)
    target = np.exp(log_k_breve + total - c)
    gamma_d = np.where(fee_in, gamma, 1.0)
    phi = (target - vr) / gamma_d
    return np.where(active, phi, 0.0)


def symmetric_form_batch(reserves, weights, gamma, prices, signatures, amplification=1.0):
    """Same optimum through the per-token symmetric expression (explicit ``j != i`` products)."""
    signatures = np.atleast_2d(signatures)
    active, w_breve = _active_weight_matrix(weights, signatures)
    fee_in = signatures == 1
    gamma_d = np.where(fee_in, gamma, 1.0)
    vr = amplification * reserves
    with np.errstate(divide="ignore"):
        # ln(m_j nu R_j / (w_j gamma**d_j))
        log_q = np.where(active, np.log(prices * vr) - np.log(w_breve) - np.log(gamma_d), 0.0)
    n = signatures.shape[1]
    off_diag = ~np.eye(n, dtype=bool)
    # others[m, i] = sum_{j != i, j in A} w_j * log_q_j
    others = np.einsum("mj,ij->mi", w_breve * log_q, off_diag.astype(float))
    log_bracket = -(1.0 - w_breve) * log_q + others
    phi = vr * np.expm1(log_bracket) / gamma_d
    return np.where(active, phi, 0.0)


def reduced_residual_batch(reserves, weights, gamma, phi, signatures, amplification=1.0):
    active, w_breve = _active_weight_matrix(weights, np.atleast_2d(signatures))
    gamma_d = np.where(signatures == 1, gamma, 1.0)
    ratio = gamma_d * phi / (amplification * reserves)
    with np.errstate(invalid="ignore", divide="ignore"):
        logs = np.where(active, np.log1p(ratio), 0.0)
    return np.expm1(np.sum(w_breve * logs, axis=1))


def assess_batch(reserves, weights, gamma, prices, signatures, phi, amplification=1.0):
    """Profit, invariant residual and validity flag for each candidate row."""
    signatures = np.atleast_2d(signatures)
    profit = -(phi @ prices)
    residual = reduced_residual_batch(reserves, weights, gamma, phi, signatures, amplification)
    active = signatures != 0
    nonzero = np.abs(phi) > ZERO_EPS * reserves
    sign_ok = np.all(np.where(active, nonzero & (np.sign(phi) == signatures), True), axis=1)
    gamma_d = np.where(signatures == 1, gamma, 1.0)
    # real (not virtual) reserves must stay positive
    reserves_ok = np.all(reserves + gamma_d * phi > 0, axis=1)
    valid = sign_ok & reserves_ok & (np.abs(residual) <= RESIDUAL_TOL) & (profit > 0)
    return profit, residual, valid


def _solution(pool, prices, sig, phi):
    profit, residual, valid = assess_batch(
        pool.reserves, pool.weights, pool.fee_gamma, prices.prices,
        sig.entries[None, :], phi[None, :], pool.amplification,
    )
    return TradeSolution(phi, sig, float(trade_profit(prices, phi)), float(residual[0]), bool(valid[0]))


def _check(pool, prices, sig):
    check_compatible(pool, prices)
    if len(sig) != pool.n_tokens:
        raise ValueError(f"signature: length {len(sig)} does not match pool size {pool.n_tokens}")


def optimal_phi(pool: PoolState, prices: MarketPrices, sig: TradeSignature) -> TradeSolution:
    _check(pool, prices, sig)
    phi = closed_form_batch(
        pool.reserves, pool.weights, pool.fee_gamma, prices.prices,
        sig.entries[None, :], pool.amplification,
    )[0]
    if not np.all(np.isfinite(phi)):
        raise DomainError("closed form produced a non-finite trade")
    return _solution(pool, prices, sig, phi)


def optimal_phi_symmetric(pool: PoolState, prices: MarketPrices, sig: TradeSignature) -> TradeSolution:
    _check(pool, prices, sig)
    phi = symmetric_form_batch(
        pool.reserves, pool.weights, pool.fee_gamma, prices.prices,
        sig.entries[None, :], pool.amplification,
    )[0]
    if not np.all(np.isfinite(phi)):
        raise DomainError("closed form produced a non-finite trade")
    return _solution(pool, prices, sig, phi)


def alignment_batch(reserves, weights, gamma, prices, signatures, phi, amplification=1.0):
    """Largest pairwise mismatch of ``m_i R_i' / (w_i gamma**d_i)`` over each row's active set."""
    signatures = np.atleast_2d(signatures)
    active, w_breve = _active_weight_matrix(weights, signatures)
    gamma_d = np.where(signatures == 1, gamma, 1.0)
    post = amplification * reserves + gamma_d * phi
    with np.errstate(divide="ignore", invalid="ignore"):
        q = prices * post / (w_breve * gamma_d)
    hi = np.max(np.where(active, q, -np.inf), axis=1)
    lo = np.min(np.where(active, q, np.inf), axis=1)
    # max over pairs of |1 - q_j / q_i| is hi / lo - 1 when every q is positive
    return hi / lo - 1.0


def post_trade_price_alignment(pool: PoolState, prices: MarketPrices, sol: TradeSolution) -> float:
    """First-order optimality residual of a trade.

    For the optimum, ``m_i R_i' / (w_i gamma**d_i)`` is the same for every active token,
    where ``R_i' = nu R_i + gamma**d_i phi_i``. Returns the largest pairwise relative
    mismatch of that quantity.
    """
    if sol.signature is None:
        return 0.0
    return float(alignment_batch(
        pool.reserves, pool.weights, pool.fee_gamma, prices.prices,
        sol.signature.entries[None, :], sol.phi[None, :], pool.amplification,
    )[0])
