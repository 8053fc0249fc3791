"""Closed-form optimal arbitrage for N-token geometric-mean market makers."""

from .pool import (
    ActiveWeights,
    DomainError,
    MarketPrices,
    PoolState,
    TradeSignature,
    TradeSolution,
    active_weights,
    apply_trade,
    invariant_k,
    raw_invariant_ratio,
    reduced_invariant_residual,
    split_phi,
    trade_profit,
)
from .closed_form import optimal_phi, optimal_phi_symmetric, post_trade_price_alignment
from .signatures import (
    SearchResult,
    SignatureSet,
    enumerate_signatures,
    find_best_trade,
    heuristic_signature,
    signature_count,
    signature_fraction,
)
from .baseline import SolverConfig, solve_grid_oracle, solve_numerical

__all__ = [
    "ActiveWeights", "DomainError", "MarketPrices", "PoolState", "TradeSignature",
    "TradeSolution", "active_weights", "apply_trade", "invariant_k", "raw_invariant_ratio",
    "reduced_invariant_residual", "split_phi", "trade_profit", "optimal_phi",
    "optimal_phi_symmetric", "post_trade_price_alignment", "SearchResult", "SignatureSet",
    "enumerate_signatures", "find_best_trade", "heuristic_signature", "signature_count",
    "signature_fraction", "SolverConfig", "solve_grid_oracle", "solve_numerical",
]
