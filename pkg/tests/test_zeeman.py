import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm, null_space

from coldcavity.errors import FitError
from coldcavity.zeeman import (FIG5_DELTA, FIG5_INTENSITIES, PumpTrajectory, SublevelPopulations,
                               beta_for, branching_weights, cg_squared_sigma_plus,
                               clebsch_gordan, equilibrium, evolve_populations, extract_beta,
                               fit_rise_rate, pumping_time_scale, rate_matrix)
from oracles import two_level_relaxation_rate, wigner3j_cg_squared

GROUND_M = range(-4, 5)


@pytest.fixture(scope="module")
def fig5_curves():
    t_end = 6.0 * pumping_time_scale(1.0, FIG5_DELTA)
    start = SublevelPopulations.uniform_ground()
    return [evolve_populations(start, i, FIG5_DELTA, t_end, n_points=600)
            for i in FIG5_INTENSITIES]


# -- angular momentum -----------------------------------------------------------

@pytest.mark.parametrize("m", GROUND_M)
def test_sigma_plus_strength_matches_wigner_3j(m):
    ref = wigner3j_cg_squared(4, m, 1, 1, 5, m + 1) / wigner3j_cg_squared(4, 4, 1, 1, 5, 5)
    assert cg_squared_sigma_plus(m) == pytest.approx(ref, rel=1e-12)


@given(st.integers(0, 4), st.integers(0, 3), st.data())
def test_clebsch_gordan_matches_sympy(j1, j2, data):
    j = data.draw(st.integers(abs(j1 - j2), j1 + j2))
    m1 = data.draw(st.integers(-j1, j1))
    m2 = data.draw(st.integers(-j2, j2))
    m = m1 + m2
    expected = wigner3j_cg_squared(j1, m1, j2, m2, j, m) if abs(m) <= j else 0.0
    assert clebsch_gordan(j1, m1, j2, m2, j, m) ** 2 == pytest.approx(expected, abs=1e-12)


def test_sigma_plus_examples():
    assert cg_squared_sigma_plus(4) == 1.0
    assert cg_squared_sigma_plus(-4) == pytest.approx(2 / 90)
    values = [cg_squared_sigma_plus(m) for m in GROUND_M]
    assert max(values) / np.mean(values) == pytest.approx(90 * 9 / 330)
    with pytest.raises(ValueError):
        cg_squared_sigma_plus(5)


def test_branching_examples():
    assert branching_weights(5) == pytest.approx((0, 0, 1))
    assert branching_weights(-5) == pytest.approx((1, 0, 0))
    for m_exc in range(-5, 6):
        assert sum(branching_weights(m_exc)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        branching_weights(6)


# -- rate equations ---------------------------------------------------------------

@given(st.floats(0, 100), st.floats(-60, 60))
def test_rate_matrix_conserves_population(intensity, delta):
    mat = rate_matrix(intensity, delta)
    assert mat.shape == (20, 20)
    assert np.max(np.abs(mat.sum(axis=0))) < 1e-12
    off = mat - np.diag(np.diag(mat))
    assert off.min() >= 0


def test_populations_validation():
    with pytest.raises(ValueError):
        SublevelPopulations(np.full(9, 0.2), np.zeros(11))
    with pytest.raises(ValueError):
        SublevelPopulations(np.full(9, 1 / 9), np.zeros(10))
    start = SublevelPopulations.uniform_ground()
    assert start.stretched == pytest.approx(1 / 9)
    assert SublevelPopulations.from_vector(start.as_vector()).stretched == start.stretched


def test_no_light_no_pumping():
    traj = evolve_populations(SublevelPopulations.uniform_ground(), 0.0, 40.0, 1e4, n_points=50)
    assert np.allclose(traj.stretched, 1 / 9, atol=1e-15)


def test_conservation_and_positivity(fig5_curves):
    for traj in fig5_curves:
        assert np.max(np.abs(traj.populations.sum(axis=1) - 1)) < 1e-9
        assert traj.populations.min() >= -1e-12
        assert np.all((traj.stretched >= 0) & (traj.stretched <= 1 + 1e-9))


def test_curves_start_at_one_ninth_and_are_ordered(fig5_curves):
    for traj in fig5_curves:
        assert traj.stretched[0] == pytest.approx(1 / 9)
    for low, high in zip(fig5_curves, fig5_curves[1:]):
        assert np.all(high.stretched >= low.stretched - 1e-9)


def test_stretched_population_is_nondecreasing(fig5_curves):
    for traj in fig5_curves:
        late = traj.times >= 5.0
        assert np.all(np.diff(traj.stretched[late]) >= -1e-12)


@pytest.mark.parametrize("intensity", FIG5_INTENSITIES)
def test_equilibrium_is_unique_and_stretched(intensity):
    assert null_space(rate_matrix(intensity, FIG5_DELTA)).shape[1] == 1
    eq = equilibrium(intensity, FIG5_DELTA)
    assert eq.min() >= -1e-12 and eq.sum() == pytest.approx(1.0)
    assert eq[8] + eq[-1] >= 0.95


def test_strongest_curve_reaches_equilibrium():
    eq = equilibrium(60.0, FIG5_DELTA)
    t_end = 12.0 * pumping_time_scale(60.0, FIG5_DELTA)
    traj = evolve_populations(SublevelPopulations.uniform_ground(), 60.0, FIG5_DELTA, t_end)
    assert eq[8] + eq[-1] > 0.95
    assert abs(traj.stretched[-1] - (eq[8] + eq[-1])) < 1e-3


def test_propagators_agree():
    start = SublevelPopulations.uniform_ground()
    a = evolve_populations(start, 10.0, FIG5_DELTA, 3000.0, n_points=31)
    b = evolve_populations(start, 10.0, FIG5_DELTA, 3000.0, n_points=31, method="rk", rtol=1e-9)
    assert np.max(np.abs(a.populations - b.populations)) < 1e-6


def test_evolve_validation():
    start = SublevelPopulations.uniform_ground()
    for kwargs in ({"intensity": -1.0}, {"t_end": 0.0}, {"n_points": 1}, {"method": "euler"}):
        args = {"intensity": 1.0, "t_end": 10.0, "n_points": 10, **kwargs}
        with pytest.raises(ValueError):
            evolve_populations(start, args.pop("intensity"), 40.0, args.pop("t_end"), **args)


# -- pumping rate -----------------------------------------------------------------

def test_two_level_fit_matches_closed_form():
    # ground g, excited e (decay 1, 90 % back to g), dark reservoir d
    r, f = 0.01, 0.9
    mat = np.array([[-r, f, 0.0], [r, -1.0, 0.0], [0.0, 1 - f, 0.0]])
    expected = two_level_relaxation_rate(r, 1.0, f)
    times = np.linspace(0.0, 8.0 / expected, 4000)
    step = expm(mat * (times[1] - times[0]))
    pops = np.empty((len(times), 3))
    pops[0] = (1.0, 0.0, 0.0)
    for i in range(1, len(times)):
        pops[i] = step @ pops[i - 1]
    assert fit_rise_rate(times, pops[:, 2]) == pytest.approx(expected, rel=1e-2)


def test_fit_recovers_exact_exponential():
    t = np.linspace(0, 50, 500)
    values = 0.9 - 0.8 * np.exp(-0.13 * t)
    assert fit_rise_rate(t, values) == pytest.approx(0.13, rel=1e-6)


def test_flat_curve_cannot_be_fitted():
    traj = PumpTrajectory(np.linspace(0, 1, 50), np.full(50, 1 / 9))
    with pytest.raises(FitError):
        extract_beta(traj, 1.0)
    with pytest.raises(ValueError):
        extract_beta(traj, 0.0)


def test_beta_decreases_with_intensity_and_stays_slow():
    betas = [beta_for(FIG5_DELTA, i) for i in FIG5_INTENSITIES]
    assert np.all(np.diff(betas) < 0)
    for beta, intensity in zip(betas, FIG5_INTENSITIES):
        assert 0 < beta * intensity < 0.2
