import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tqm.representation import (
    EnergyGrid,
    Exponential,
    Gauss,
    Indicator,
    PhysicsParams,
    TimeGrid,
    make_energy_state,
)

settings.register_profile("tqm", max_examples=25, deadline=None,
                          suppress_health_check=[HealthCheck.function_scoped_fixture])
settings.load_profile("tqm")

P1 = PhysicsParams(1.0)


@pytest.fixture(scope="session")
def egrid():
    """Default energy grid [0, 40), n = 2^14."""
    return EnergyGrid(40.0, 2 ** 14)


@pytest.fixture(scope="session")
def tgrid():
    """Default time window [-80, 80), m = 2^14."""
    return TimeGrid(-80.0, 80.0, 2 ** 14)


@pytest.fixture(scope="session")
def cgrid():
    """Grid with step 2^-9, so 0.5 and 1 are whole numbers of steps."""
    return EnergyGrid(32.0, 2 ** 14)


@pytest.fixture(scope="session")
def small():
    return EnergyGrid(16.0, 2 ** 10)


@pytest.fixture(scope="session")
def exp1(egrid):
    return make_energy_state(Exponential(1.0), egrid, P1)


@pytest.fixture(scope="session")
def states(egrid):
    return [make_energy_state(s, egrid, P1)
            for s in (Exponential(1.0), Indicator(0.0, 1.0), Gauss(10.0, 1.0))]


def lorentz(tau, scale):
    """Cauchy density of the given scale, written out independently."""
    return scale / (math.pi * (np.asarray(tau) ** 2 + scale ** 2))
