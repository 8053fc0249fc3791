"""Trade-signature enumeration, brute-force best-trade search and the pairwise heuristic."""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional

import numpy as np

from .closed_form import assess_batch, closed_form_batch
from .pool import MarketPrices, PoolState, TradeSignature, TradeSolution, check_compatible

MAX_ENUMERATE = 12
MAX_COUNT = 30
TIE_RTOL = 1e-12
DEFAULT_CHUNK = 1024
MIN_THREAD_CHUNK = 32
HEURISTIC_RTOL = 1e-12


def signature_count(n: int) -> int:
    """Number of ternary vectors of length ``n`` with at least one +1 and one -1."""
    return 3**n - 2 ** (n + 1) + 1


def signature_fraction(n: int) -> float:
    if not 2 <= n <= MAX_COUNT:
        raise ValueError(f"n: must lie in [2, {MAX_COUNT}], got {n}")
    return signature_count(n) / 3**n


@lru_cache(maxsize=None)
def _signature_matrix(n: int) -> np.ndarray:
    # itertools.product counts in base 3 with the first position most significant
    rows = [
        s for s in itertools.product((-1, 0, 1), repeat=n)
        if 1 in s and -1 in s
    ]
    out = np.array(rows, dtype=np.int8)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SignatureSet:
    n_tokens: int
    signatures: np.ndarray  # (M, N) int8, canonical order

    def __len__(self):
        return self.signatures.shape[0]

    def __iter__(self) -> Iterator[TradeSignature]:
        for row in self.signatures:
            yield TradeSignature(row)

    def __getitem__(self, i) -> TradeSignature:
        return TradeSignature(self.signatures[i])


def enumerate_signatures(n: int) -> SignatureSet:
    if not 2 <= n <= MAX_ENUMERATE:
        raise ValueError(f"n: enumeration supports 2 <= n <= {MAX_ENUMERATE}, got {n}")
    return SignatureSet(n, _signature_matrix(n))


def swap_signatures(n: int) -> SignatureSet:
    """The pure swaps: exactly one token in and one token out."""
    sigs = _signature_matrix(n)
    return SignatureSet(n, sigs[np.count_nonzero(sigs, axis=1) == 2])


@dataclass(frozen=True)
class SearchResult:
    best: TradeSolution
    evaluated_count: int
    all_solutions: Optional[list] = None

    @property
    def no_arb(self) -> bool:
        return self.best.is_zero


def _evaluate_chunk(pool, prices, sigs, offset):
    phi = closed_form_batch(
        pool.reserves, pool.weights, pool.fee_gamma, prices, sigs, pool.amplification
    )
    profit, residual, valid = assess_batch(
        pool.reserves, pool.weights, pool.fee_gamma, prices, sigs, phi, pool.amplification
    )
    idx = np.flatnonzero(valid)
    return offset + idx, profit[idx], phi, profit, residual, valid


def _pick(indices, profits, n_active):
    """Winner among valid candidates: max profit, then fewer active tokens, then order."""
    if indices.size == 0:
        return None
    top = profits.max()
    near = profits >= top - TIE_RTOL * abs(top)
    cand = indices[near]
    order = np.lexsort((cand, n_active[cand]))
    return int(cand[order[0]])


def find_best_trade(
    pool: PoolState,
    prices: MarketPrices,
    threads: Optional[int] = None,
    signatures: Optional[SignatureSet] = None,
    chunk_size: int = DEFAULT_CHUNK,
    keep_all: bool = False,
) -> SearchResult:
    """Best valid closed-form trade over every signature (or over ``signatures``).

    Chunks of signatures are evaluated independently and reduced with a fixed tie-break,
    so the winner does not depend on ``threads`` or ``chunk_size``.
    """
    check_compatible(pool, prices)
    if signatures is None:
        signatures = enumerate_signatures(pool.n_tokens)
    sigs = signatures.signatures
    m = prices.prices
    threads = threads or os.cpu_count() or 1
    if threads > 1:
        # give every worker something to do, but keep chunks big enough to vectorise
        chunk_size = min(chunk_size, max(MIN_THREAD_CHUNK, -(-len(sigs) // threads)))
    starts = range(0, len(sigs), chunk_size)

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool_exec:
            parts = list(pool_exec.map(
                lambda s: _evaluate_chunk(pool, m, sigs[s:s + chunk_size], s), starts
            ))
    else:
        parts = [_evaluate_chunk(pool, m, sigs[s:s + chunk_size], s) for s in starts]

    indices = np.concatenate([p[0] for p in parts])
    profits = np.concatenate([p[1] for p in parts])
    n_active = np.count_nonzero(sigs, axis=1)
    winner = _pick(indices, profits, n_active)

    all_solutions = None
    if keep_all:
        all_solutions = []
        for s, part in zip(starts, parts):
            _, _, phi, profit, residual, valid = part
            for k in range(phi.shape[0]):
                all_solutions.append(TradeSolution(
                    phi[k], TradeSignature(sigs[s + k]), float(profit[k]),
                    float(residual[k]), bool(valid[k]),
                ))

    if winner is None:
        best = TradeSolution.zero(pool.n_tokens)
    else:
        part = parts[winner // chunk_size]
        k = winner % chunk_size
        best = TradeSolution(
            part[2][k], TradeSignature(sigs[winner]), float(part[3][k]), float(part[4][k]), True
        )
    return SearchResult(best, len(sigs), all_solutions)


def price_ratio_vector(pool: PoolState, prices: MarketPrices) -> np.ndarray:
    """Zero-fee quoted price over market price per token, ``V w / (R m)``."""
    m = prices.prices
    value = float(np.dot(m, pool.reserves))
    return value * pool.weights / (pool.reserves * m)


def signature_from_ratios(ell, gamma: float) -> Optional[TradeSignature]:
    ell = np.asarray(ell, dtype=float)
    # comparisons allow for roundoff in ell, otherwise a fee-free pool at equilibrium
    # would report trades made of rounding error
    tol = HEURISTIC_RTOL
    quotient = ell[:, None] / ell[None, :]
    outside = (np.any(quotient > (1.0 + tol) / gamma, axis=1)
               | np.any(quotient < gamma * (1.0 - tol), axis=1))
    s = np.where(ell > 1.0 + tol, 1, np.where(ell < 1.0 - tol, -1, 0))
    s = np.where(outside, s, 0)
    if not (np.any(s == 1) and np.any(s == -1)):
        return None
    return TradeSignature(s)


def heuristic_signature(pool: PoolState, prices: MarketPrices) -> Optional[TradeSignature]:
    """Guess a signature from pairwise swap-level mispricings; ``None`` if none is apparent."""
    check_compatible(pool, prices)
    return signature_from_ratios(price_ratio_vector(pool, prices), pool.fee_gamma)
