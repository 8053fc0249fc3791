"""Pool, price and trade value types for weighted geometric-mean market makers.

A pool holds reserves ``R`` with weights ``w`` and accepts a trade ``(Delta, Lambda)``
when ``prod(nu*R + gamma*Delta - Lambda) ** w >= nu * prod(R ** w)``.  Trades are
carried around as the single net vector ``phi = Delta - Lambda``.

All products of powers are evaluated in log space.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

WEIGHT_SUM_TOL = 1e-12
RESIDUAL_TOL = 1e-9


class DomainError(ValueError):
    """A trade would empty or overdraw a reserve."""


def _frozen(values, name: str) -> np.ndarray:
    try:
        arr = np.array(values, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{name}: expected a list of numbers ({exc})") from None
    if arr.ndim != 1:
        raise ValueError(f"{name}: expected a flat list, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name}: entries must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class PoolState:
    reserves: np.ndarray
    weights: np.ndarray
    fee_gamma: float = 1.0
    amplification: float = 1.0

    def __post_init__(self):
        reserves = _frozen(self.reserves, "reserves")
        weights = _frozen(self.weights, "weights")
        object.__setattr__(self, "reserves", reserves)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "fee_gamma", float(self.fee_gamma))
        object.__setattr__(self, "amplification", float(self.amplification))

        if reserves.size < 2:
            raise ValueError("reserves: a pool needs at least two tokens")
        if weights.shape != reserves.shape:
            raise ValueError(
                f"weights: length {weights.size} does not match reserves length {reserves.size}"
            )
        if np.any(reserves <= 0):
            raise ValueError("reserves: all reserves must be strictly positive")
        if np.any(weights <= 0) or np.any(weights >= 1):
            raise ValueError("weights: every weight must lie in (0, 1)")
        if abs(math.fsum(weights) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights: must sum to 1, got {math.fsum(weights)!r}")
        if not 0.0 < self.fee_gamma <= 1.0:
            raise ValueError(f"fee_gamma: must lie in (0, 1], got {self.fee_gamma!r}")
        if not self.amplification >= 1.0:
            raise ValueError(f"amplification: must be >= 1, got {self.amplification!r}")

    @property
    def n_tokens(self) -> int:
        return self.reserves.size

    @property
    def virtual_reserves(self) -> np.ndarray:
        return self.amplification * self.reserves

    def with_reserves(self, reserves) -> "PoolState":
        return PoolState(reserves, self.weights, self.fee_gamma, self.amplification)

    def value(self, prices: "MarketPrices") -> float:
        """Pool value of the real reserves in the price numeraire."""
        return float(np.dot(prices.prices, self.reserves))

    def to_dict(self) -> dict:
        return {
            "reserves": self.reserves.tolist(),
            "weights": self.weights.tolist(),
            "fee_gamma": self.fee_gamma,
            "amplification": self.amplification,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PoolState":
        if not isinstance(doc, dict):
            raise ValueError("pool: expected a JSON object")
        for key in ("reserves", "weights"):
            if key not in doc:
                raise ValueError(f"{key}: missing field")
        return cls(
            doc["reserves"],
            doc["weights"],
            doc.get("fee_gamma", 1.0),
            doc.get("amplification", 1.0),
        )

    @classmethod
    def at_equilibrium(cls, prices, weights, value: float, fee_gamma: float = 1.0,
                       amplification: float = 1.0) -> "PoolState":
        """Pool whose quoted prices match ``prices`` and whose value is ``value``."""
        prices = np.asarray(getattr(prices, "prices", prices), dtype=float)
        weights = np.asarray(weights, dtype=float)
        return cls(value * weights / prices, weights, fee_gamma, amplification)


@dataclass(frozen=True)
class MarketPrices:
    prices: np.ndarray

    def __post_init__(self):
        prices = _frozen(self.prices, "prices")
        if np.any(prices <= 0):
            raise ValueError("prices: all prices must be strictly positive")
        object.__setattr__(self, "prices", prices)

    @property
    def n_tokens(self) -> int:
        return self.prices.size

    def to_dict(self) -> dict:
        return {"prices": self.prices.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "MarketPrices":
        if not isinstance(doc, dict) or "prices" not in doc:
            raise ValueError("prices: missing field")
        return cls(doc["prices"])


@dataclass(frozen=True)
class TradeSignature:
    """Per-token direction: +1 into the pool, -1 out of the pool, 0 untouched."""

    entries: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.entries)
        if raw.ndim != 1 or not np.all(np.isin(raw, (-1, 0, 1))):
            raise ValueError("signature: entries must be drawn from {-1, 0, +1}")
        entries = raw.astype(np.int8)
        if not (np.any(entries == 1) and np.any(entries == -1)):
            raise ValueError("signature: needs at least one +1 and at least one -1 entry")
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @property
    def active(self) -> np.ndarray:
        return self.entries != 0

    @property
    def fee_indicator(self) -> np.ndarray:
        return (self.entries == 1).astype(np.int8)

    @property
    def n_active(self) -> int:
        return int(np.count_nonzero(self.entries))

    def __len__(self):
        return self.entries.size

    def __eq__(self, other):
        if not isinstance(other, TradeSignature):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())

    def __repr__(self):
        return f"TradeSignature({self.entries.tolist()})"


@dataclass(frozen=True)
class ActiveWeights:
    values: np.ndarray
    k_breve: float


@dataclass(frozen=True)
class TradeSolution:
    phi: np.ndarray
    signature: Optional[TradeSignature]
    profit: float
    invariant_residual: float
    valid: bool
    converged: bool = True
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        phi = _frozen(self.phi, "phi")
        object.__setattr__(self, "phi", phi)

    @classmethod
    def zero(cls, n_tokens: int) -> "TradeSolution":
        return cls(np.zeros(n_tokens), None, 0.0, 0.0, False)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.phi)

    def to_dict(self) -> dict:
        delta, lam = split_phi(self)
        return {
            "phi": self.phi.tolist(),
            "delta": delta.tolist(),
            "lambda": lam.tolist(),
            "signature": None if self.signature is None else self.signature.entries.tolist(),
            "profit": self.profit,
            "invariant_residual": self.invariant_residual,
            "valid": self.valid,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TradeSolution":
        sig = doc.get("signature")
        return cls(
            doc["phi"],
            None if sig is None else TradeSignature(sig),
            float(doc.get("profit", 0.0)),
            float(doc.get("invariant_residual", 0.0)),
            bool(doc.get("valid", False)),
            bool(doc.get("converged", True)),
        )


def active_weights(pool: PoolState, sig: TradeSignature) -> ActiveWeights:
    active = sig.active
    w = pool.weights[active]
    w_breve = w / w.sum()
    k_breve = math.exp(float(np.dot(w_breve, np.log(pool.reserves[active]))))
    return ActiveWeights(w_breve, k_breve)


def invariant_k(pool: PoolState) -> float:
    """Weighted geometric mean of the virtual reserves, ``prod((nu*R) ** w)``."""
    return math.exp(math.fsum(pool.weights * np.log(pool.virtual_reserves)))


def _active_and_fee(sol: TradeSolution):
    if sol.signature is not None:
        return sol.signature.active, sol.signature.entries == 1
    return sol.phi != 0, sol.phi > 0


def reduced_invariant_residual(pool: PoolState, sol: TradeSolution) -> float:
    """``prod_A (1 + gamma**d * phi / (nu*R)) ** w_breve - 1`` over the active tokens.

    Zero means the trade sits exactly on the pool's level set.
    """
    active, fee_in = _active_and_fee(sol)
    if not np.any(active):
        return 0.0
    if sol.signature is not None and np.any(sol.phi[~active]):
        raise ValueError("phi: nonzero entries on inactive tokens")
    gamma_d = np.where(fee_in, pool.fee_gamma, 1.0)[active]
    ratio = gamma_d * sol.phi[active] / pool.virtual_reserves[active]
    if np.any(ratio <= -1.0):
        raise DomainError("trade would empty or overdraw a reserve")
    w = pool.weights[active]
    return math.expm1(float(np.dot(w / w.sum(), np.log1p(ratio))))


def raw_invariant_ratio(pool: PoolState, phi) -> float:
    """``prod(nu*R + gamma*Delta - Lambda) ** w / k``; at least 1 for acceptable trades."""
    phi = np.asarray(phi, dtype=float)
    post = pool.virtual_reserves + pool.fee_gamma * np.maximum(phi, 0.0) - np.maximum(-phi, 0.0)
    if np.any(post <= 0):
        raise DomainError("trade would empty or overdraw a reserve")
    log_ratio = math.fsum(pool.weights * (np.log(post) - np.log(pool.virtual_reserves)))
    return math.exp(log_ratio)


def trade_profit(prices: MarketPrices, sol) -> float:
    phi = getattr(sol, "phi", sol)
    phi = np.asarray(phi, dtype=float)
    if phi.shape != prices.prices.shape:
        raise ValueError(f"phi: length {phi.size} does not match prices length {prices.n_tokens}")
    return -math.fsum(prices.prices * phi)


def split_phi(sol) -> tuple[np.ndarray, np.ndarray]:
    """Split a net trade into (amounts in, amounts out)."""
    phi = np.asarray(getattr(sol, "phi", sol), dtype=float)
    return np.maximum(phi, 0.0), np.maximum(-phi, 0.0)


def apply_trade(pool: PoolState, phi) -> PoolState:
    """Post-trade pool, ``R <- R + gamma*Delta - Lambda``; fees leave the reserves."""
    delta, lam = split_phi(phi)
    new = pool.reserves + pool.fee_gamma * delta - lam
    if np.any(new <= 0):
        raise DomainError("trade would empty or overdraw a reserve")
    return pool.with_reserves(new)


def solve_token_on_level_set(pool: PoolState, phi, index: int, direction: int) -> float:
    """Amount of token ``index`` that puts an otherwise fixed trade back on the level set.

    ``direction`` is +1 when the token goes into the pool (so the fee applies), -1 when it
    comes out. Returns ``nan`` if no such amount exists.
    """
    phi = np.asarray(phi, dtype=float)
    vr = pool.virtual_reserves
    others = np.arange(phi.size) != index
    gamma_d = np.where(phi > 0, pool.fee_gamma, 1.0)
    ratio = gamma_d[others] * phi[others] / vr[others]
    if np.any(ratio <= -1.0):
        return math.nan
    log_rest = float(np.dot(pool.weights[others], np.log1p(ratio)))
    log_factor = -log_rest / pool.weights[index]
    g = pool.fee_gamma if direction > 0 else 1.0
    return vr[index] * math.expm1(log_factor) / g


def pool_from_json(text: str) -> PoolState:
    return PoolState.from_dict(json.loads(text))


def prices_from_json(text: str) -> MarketPrices:
    return MarketPrices.from_dict(json.loads(text))


def check_compatible(pool: PoolState, prices: MarketPrices) -> None:
    if pool.n_tokens != prices.n_tokens:
        raise ValueError(
            f"prices: length {prices.n_tokens} does not match pool size {pool.n_tokens}"
        )
