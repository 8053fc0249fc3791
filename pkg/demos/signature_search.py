"""
Searching every trade signature
===============================

With fees the optimal trade depends on which tokens go in and which come out.
Each token is +1 (paid in), -1 (withdrawn) or 0 (untouched); we solve every
combination in closed form and keep the best valid one.
"""

import numpy as np

from g3marb import (
    MarketPrices, PoolState, enumerate_signatures, find_best_trade,
    heuristic_signature, signature_count,
)

for n in range(2, 9):
    print(f"N={n}: {signature_count(n):5d} signatures out of {3 ** n}")

rng = np.random.default_rng(3)
m = rng.uniform(0.5, 2.0, 4)
pool = PoolState.at_equilibrium(MarketPrices(m), [0.1, 0.2, 0.3, 0.4], 1e4, fee_gamma=0.997)

# Shock the market: tokens 0 and 3 move up, token 1 down.
shocked = MarketPrices(m * np.array([1.04, 0.97, 1.0, 1.02]))
result = find_best_trade(pool, shocked, keep_all=True)
print("\nsignatures evaluated:", result.evaluated_count)
print("valid candidates:", sum(s.valid for s in result.all_solutions))
print("best signature:", result.best.signature.entries, " profit:", result.best.profit)

# The pairwise heuristic guesses a signature from quoted/market price ratios.
print("heuristic guess:", heuristic_signature(pool, shocked))

# Back at the unshocked prices there is nothing to do.
print("at equilibrium:", find_best_trade(pool, MarketPrices(m)).no_arb)

print("\nall two-token signatures:", enumerate_signatures(2).signatures.tolist())
