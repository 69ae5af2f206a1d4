import numpy as np
import pytest

from qzsg import game


@pytest.fixture
def mp():
    return game.matching_pennies().observable()


@pytest.fixture(scope="session")
def two_qubit():
    return game.multi_qubit_interior_game(2, seed=3).observable()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
