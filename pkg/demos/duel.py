"""
Two arbitrageurs, one pool
==========================

A three-token pool with a 0.3% fee follows a random price walk. At every step the
baseline arbitrageur trades first and the closed-form arbitrageur takes whatever
is left. Then each runs alone on the same series.
"""

from g3marb import MarketPrices, PoolState, sim

series = sim.synthetic_price_walk(n_tokens=3, n_steps=3000, volatility=0.01, seed=0)
pool = PoolState.at_equilibrium(MarketPrices(series.prices[0]), [1 / 3] * 3, 1e6, fee_gamma=0.997)

for mode in ("baseline", "closed_form", "closed_form_only", "baseline_only"):
    s = sim.summarize_duel(sim.run_duel(series, pool, mode))
    print(f"{mode:17s} closed form {s['closed_form_final_profit']:.5f} ({s['closed_form_trades']} trades)   "
          f"baseline {s['baseline_final_profit']:.5f} ({s['baseline_trades']} trades)")

# Alone, a slower arbitrageur can come out ahead by letting mispricing build up
# before taking it. Against a competitor that opportunity is gone.
