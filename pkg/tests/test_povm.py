import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import P1, lorentz
from tqm.povm import (
    ClippedIntervalWarning,
    DensityProfile,
    Interval,
    NogoTable,
    ideal_time_density,
    lorentzian_tv,
    ml_estimate,
    nogo_sweep,
    povm_probability,
    total_variation,
)
from tqm.representation import EnergyGrid, Exponential, TimeGrid, evolve, make_energy_state


def _profile(values, lo=-1.0, hi=1.0):
    return DensityProfile(TimeGrid(lo, hi, len(values)), np.asarray(values, float))


def test_density_validation():
    with pytest.raises(ValueError):
        _profile([1.0, -0.1, 0.0])
    with pytest.raises(ValueError):
        DensityProfile(TimeGrid(0, 1, 4), np.ones(3))


def test_ideal_density_is_lorentzian(exp1, tgrid):
    d = ideal_time_density(exp1, tgrid)
    i = np.argmin(np.abs(tgrid.points))
    assert d.values[i] == pytest.approx(1 / math.pi, rel=1e-6)
    assert d.tail_loss == pytest.approx(1 - (2 / math.pi) * math.atan(80.0), abs=2e-4)


def test_interval_probability_matches_arctan(exp1, tgrid):
    p = povm_probability(exp1, Interval(-1.0, 1.0), tgrid)
    assert p == pytest.approx((2 / math.pi) * math.atan(1.0), abs=1e-5)


@given(a=st.floats(-70, 60), w1=st.floats(0.01, 5), w2=st.floats(0.01, 5))
def test_probability_is_additive(a, w1, w2):
    g = TimeGrid(-80, 80, 2048)
    d = DensityProfile(g, lorentz(g.points, 1.0))
    b, c = a + w1, a + w1 + w2
    assert d.probability(a, b) + d.probability(b, c) == pytest.approx(d.probability(a, c), abs=1e-14)


def test_probability_clipping_warns():
    d = _profile([1.0, 1.0, 1.0, 1.0])
    with pytest.warns(ClippedIntervalWarning):
        d.probability(-5, 0)
    with pytest.raises(ValueError):
        Interval(1.0, 1.0)


def test_cdf_nodes_end_at_one():
    d = _profile([0.0, 1.0, 3.0, 1.0])
    c = d.cdf_nodes()
    assert c[0] == 0 and c[-1] == 1 and np.all(np.diff(c) >= 0)
    with pytest.raises(ValueError):
        _profile([0.0, 0.0]).cdf_nodes()


def test_ml_estimate_parabolic_refinement():
    g = TimeGrid(-2, 2, 400)
    d = DensityProfile(g, np.exp(-(g.points - 0.3031) ** 2))
    assert ml_estimate(d) == pytest.approx(0.3031, abs=1e-4)


def test_ml_estimate_ties_take_smallest_tau():
    d = _profile([0.0, 2.0, 1.0, 2.0, 0.0])
    assert ml_estimate(d) == d.grid.points[1]
    with pytest.raises(ValueError):
        ml_estimate(_profile([0.0, 0.0, 0.0]))


@given(t=st.integers(-50, 50))
def test_ml_estimate_is_shift_equivariant(t):
    g = EnergyGrid(40.0, 2 ** 12)
    tg = TimeGrid(-20, 20, 4000)
    psi = make_energy_state(Exponential(1.0), g, P1)
    shift = t * tg.step
    a = ml_estimate(ideal_time_density(psi, tg))
    b = ml_estimate(ideal_time_density(evolve(psi, shift), tg))
    assert b - a == pytest.approx(shift, abs=1e-9)


def test_total_variation_basics():
    p = _profile([0.0, 1.0, 1.0, 0.0])
    q = _profile([1.0, 1.0, 0.0, 0.0])
    assert total_variation(p, p) == 0
    assert total_variation(p, q) == pytest.approx(total_variation(q, p))
    with pytest.raises(ValueError):
        total_variation(p, _profile([1, 1, 1, 1], -2, 2))


def test_lorentzian_tv_closed_form():
    # crossing at tau^2 = ab; for scales 1 and 2 the distance is 0.2163...
    assert lorentzian_tv(1.0, 2.0) == pytest.approx(0.21634689593878548, abs=1e-15)
    assert lorentzian_tv(3.0, 3.0) == 0.0
    assert lorentzian_tv(2.0, 1.0) == lorentzian_tv(1.0, 2.0)


def test_nogo_sweep_validates_widths(exp1, tgrid):
    for bad in ([], [1.0, -1.0], [0.1, 1.0]):
        with pytest.raises(ValueError):
            nogo_sweep(exp1, bad, tgrid)


def test_nogo_table(tmp_path):
    t = NogoTable([1.0, 0.1], [0.2, 0.03])
    assert t.positive and t.decreasing
    assert not NogoTable([1.0, 0.1], [0.2, 0.3]).decreasing
    t.to_csv(tmp_path / "n.csv")
    assert (tmp_path / "n.csv").read_text().splitlines()[0] == "lambda,tv_distance"
