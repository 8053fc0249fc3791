import numpy as np
import pytest

from g3marb import (
    MarketPrices,
    PoolState,
    SolverConfig,
    find_best_trade,
    solve_grid_oracle,
    solve_numerical,
)
from g3marb.baseline import ConvergenceWarning
from g3marb.pool import raw_invariant_ratio

from conftest import random_instance

WORKED_PROFIT = 0.238230365969691


def test_worked_instance_baseline(worked_pool, worked_prices):
    sol = solve_numerical(worked_pool, worked_prices)
    assert sol.profit == pytest.approx(WORKED_PROFIT, rel=1e-4)
    assert sol.converged
    assert raw_invariant_ratio(worked_pool, sol.phi) >= 1 - 1e-12


def test_equilibrium_baseline(equilibrium):
    pool, prices = equilibrium
    sol = solve_numerical(pool, prices)
    assert sol.profit <= 1e-6 * pool.value(prices)


@pytest.mark.filterwarnings("ignore::g3marb.baseline.ConvergenceWarning")
def test_baseline_never_beats_closed_form(rng):
    for _ in range(40):
        pool, prices = random_instance(rng, n=int(rng.integers(2, 5)), gamma=0.997)
        cf = find_best_trade(pool, prices).best.profit
        bl = solve_numerical(pool, prices).profit
        value = pool.value(prices)
        assert bl <= cf + 1e-9 * value


def test_baseline_is_deterministic(worked_pool, worked_prices):
    cfg = SolverConfig(seed=3)
    a = solve_numerical(worked_pool, worked_prices, cfg)
    b = solve_numerical(worked_pool, worked_prices, cfg)
    assert np.array_equal(a.phi, b.phi)


def test_iteration_budget_exhaustion_warns(worked_pool, worked_prices):
    with pytest.warns(ConvergenceWarning):
        sol = solve_numerical(worked_pool, worked_prices, SolverConfig(max_iterations=3))
    assert not sol.converged
    # the best feasible iterate is still returned
    assert raw_invariant_ratio(worked_pool, sol.phi) >= 1 - 1e-12


@pytest.mark.parametrize("field, value", [
    ("max_iterations", 0), ("step_size", 0.0), ("penalty_weight", -1.0), ("convergence_tol", 0.0),
])
def test_solver_config_validation(field, value):
    with pytest.raises(ValueError, match=field):
        SolverConfig(**{field: value})


def test_solver_config_unknown_field():
    with pytest.raises(ValueError, match="bogus"):
        SolverConfig.from_dict({"bogus": 1})


def test_oracle_worked_instance(worked_pool, worked_prices):
    sol = solve_grid_oracle(worked_pool, worked_prices, 2001)
    assert abs(sol.profit - 0.238) <= 1e-3
    assert abs(sol.profit - WORKED_PROFIT) <= 1e-5
    assert sol.profit <= WORKED_PROFIT * (1 + 1e-12)


def test_oracle_refinement_converges(worked_pool, worked_prices):
    coarse = solve_grid_oracle(worked_pool, worked_prices, 21, refine=False).profit
    fine = solve_grid_oracle(worked_pool, worked_prices, 21, refine=True).profit
    assert coarse <= fine <= WORKED_PROFIT * (1 + 1e-12)


def test_oracle_equilibrium(equilibrium):
    sol = solve_grid_oracle(*equilibrium, grid_points=201)
    assert sol.is_zero


def test_oracle_limits(rng):
    pool, prices = random_instance(rng, n=4)
    with pytest.raises(ValueError):
        solve_grid_oracle(pool, prices)
    with pytest.raises(ValueError):
        solve_grid_oracle(PoolState([1.0, 1.0], [0.5, 0.5]), MarketPrices([1.0, 2.0]), 5000)
