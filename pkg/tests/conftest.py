import numpy as np
import pytest

from g3marb import MarketPrices, PoolState

GAMMAS = (1.0, 0.997, 0.95)


def random_instance(rng, n=None, gamma=None, spread=0.2, amplification=1.0):
    """Pool with log-uniform reserves over six decades and prices scattered around its quotes."""
    n = n or int(rng.integers(2, 7))
    gamma = gamma if gamma is not None else GAMMAS[rng.integers(len(GAMMAS))]
    reserves = 10.0 ** rng.uniform(0, 6, n)
    w = rng.uniform(0.2, 1.0, n)
    w = w / w.sum()
    quoted = w / reserves
    prices = quoted * np.exp(spread * rng.standard_normal(n)) * 10.0 ** rng.uniform(-2, 2)
    return PoolState(reserves, w, gamma, amplification), MarketPrices(prices)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def worked_pool():
    return PoolState([100.0, 100.0], [0.5, 0.5], 1.0)


@pytest.fixture
def worked_prices():
    return MarketPrices([1.1, 1.0])


@pytest.fixture
def equilibrium():
    pool = PoolState([100.0, 200.0, 400.0], [1 / 3, 1 / 3, 1 / 3], 0.997)
    return pool, MarketPrices([4.0, 2.0, 1.0])


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
