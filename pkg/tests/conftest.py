"""Shared fixtures: standard potentials and cached kernel workspaces."""

from functools import lru_cache

import pytest

from betalab.equilibrium import equilibrium_measure
from betalab.orthopoly import build_workspace
from betalab.potential import GAUSSIAN, Polynomial

QUARTIC = Polynomial([0.0, 0.0, 0.0, 0.0, 0.25])
SHIFTED = Polynomial([0.0, 0.1, 0.5])
DOUBLE_WELL = Polynomial([0.0, 0.0, -1.0, 0.0, 0.25])
SEXTIC = Polynomial([0.0, 0.0, 0.5, 0.0, 0.1, 0.0, 0.05])


@lru_cache(maxsize=None)
def workspace(coeffs: tuple, n: int):
    return build_workspace(Polynomial(list(coeffs)), n)


@lru_cache(maxsize=None)
def measure(coeffs: tuple):
    return equilibrium_measure(Polynomial(list(coeffs)))


@pytest.fixture(scope="session")
def gaussian_eq():
    return measure(tuple(GAUSSIAN.tolist()))


@pytest.fixture(scope="session")
def quartic_eq():
    return measure(tuple(QUARTIC.tolist()))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
