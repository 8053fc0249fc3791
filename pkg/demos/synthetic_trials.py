"""
Closed form against an iterative solver
=======================================

Each trial builds a pool at equilibrium with random prices and weights, then
shocks the market prices upward by up to ``shock_scale``. Both methods look for
the best trade; the closed form is exact, so the gap is the iterative solver's loss.
"""

from g3marb import sim

for n in (2, 3, 4):
    cfg = sim.TrialConfig(n_tokens=n, n_trials=300, seed=1)
    summary = sim.summarize_trials(sim.run_trials(cfg))
    print(
        f"N={n}: trades found {summary['arb_rate_closed_form']:.0%}, "
        f"mean gap {summary['mean_profit_gap']:.3e}, "
        f"closed form at least as good in {summary['closed_form_weak_win_rate']:.1%} of trials, "
        f"median time {summary['median_closed_form_time'] * 1e3:.2f} ms vs "
        f"{summary['median_baseline_time'] * 1e3:.2f} ms"
    )

# No shock means no arbitrage.
calm = sim.summarize_trials(sim.run_trials(sim.TrialConfig(n_trials=100, shock_scale=0.0)))
print("a=0: trades found", calm["arb_rate_closed_form"], calm["arb_rate_baseline"])
