"""Shared fixtures and hypothesis configuration for the suite."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import lopashka as lp

settings.register_profile(
    "suite",
    max_examples=40,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def heat_dirichlet():
    return lp.load_fixture("heat-dirichlet")


@pytest.fixture(scope="session")
def heat_neumann():
    return lp.load_fixture("heat-neumann")


@pytest.fixture(scope="session")
def heat_robin():
    return lp.load_fixture("heat-robin")


@pytest.fixture(scope="session")
def biharmonic():
    return lp.load_fixture("biharmonic")


@pytest.fixture(scope="session")
def catalysis():
    return lp.load_fixture("catalysis")


@pytest.fixture(scope="session")
def mixed_two_component():
    return lp.load_fixture("mixed-two-component")


@pytest.fixture(scope="session")
def duplicate_row():
    return lp.load_fixture("duplicate-row")


@pytest.fixture(scope="session")
def scalar_symbol():
    """Plain second-order scalar symbol on two variables."""
    one = np.eye(1)
    return lp.InteriorSymbol(2, 2, {(2, 0): one, (0, 2): one})


def physical_slots(sol):
    """Rescale an OdeSolution slot vector to unscaled derivatives.

    Block ``s`` of ``sol.slots`` carries ``rho**-s D_y^s v(0)``;
    multiplying by ``rho**s`` recovers the physical slot vector, which
    a solution map built at ``rho = 1`` reports directly.
    """
    out = np.asarray(sol.slots, dtype=complex).copy()
    N = sol.N
    for s in range(2 * sol.m):
        out[s * N:(s + 1) * N] *= sol.rho ** s
    return out
