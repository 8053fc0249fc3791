"""
One optimal trade, three ways
=============================

A two-token pool holding 100 of each token at equal weight, no fee, while the
market values token 0 at 1.1 and token 1 at 1.0.
"""

import numpy as np

from g3marb import (
    MarketPrices, PoolState, SolverConfig, TradeSignature,
    optimal_phi, solve_grid_oracle, solve_numerical,
)

pool = PoolState(reserves=[100.0, 100.0], weights=[0.5, 0.5], fee_gamma=1.0)
prices = MarketPrices([1.1, 1.0])

# The pool underprices token 0, so we take token 0 out and pay in token 1.
sig = TradeSignature([-1, +1])
exact = optimal_phi(pool, prices, sig)
print("closed form  phi =", exact.phi, " profit =", exact.profit)
print("  expected   phi =", np.array([100 / np.sqrt(1.1) - 100, 100 * np.sqrt(1.1) - 100]))

# A dense grid over the pay-in amount, each point completed onto the level set.
grid = solve_grid_oracle(pool, prices, grid_points=2001)
print("grid oracle  profit =", grid.profit)

# The iterative barrier solver needs no signature at all.
numeric = solve_numerical(pool, prices, SolverConfig(seed=0))
print("barrier      profit =", numeric.profit, " iterations:", numeric.meta["iterations"])

# With a 0.3% fee the same mispricing is worth a little less.
fee_pool = PoolState([100.0, 100.0], [0.5, 0.5], fee_gamma=0.997)
print("with fee     profit =", optimal_phi(fee_pool, prices, sig).profit)
