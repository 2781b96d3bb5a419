import math

import numpy as np
import pytest

from coldcavity.dynamics import (ScanKind, ScanProtocol, ScanTrace, analyze_steps,
                                 cycle_mechanism, detect_limit_cycle, detect_switches,
                                 final_state, integrate, stepwise_pumping_run)
from coldcavity.errors import ConfigError, WindowTooShortError
from coldcavity.model import ModelParams, SystemState
from coldcavity.presets import drive_for_ratio, scenario
from coldcavity.steady import find_fixed_points
from oracles import lorentzian_intensity, sinusoid_trace_arrays


def make(**kw):
    base = dict(delta=44.0, phi0=0.0, gamma_cav=0.055, kappa=0.96, cooperativity=0.0,
                beta=0.0, gamma_p=1e-3, drive=2.0, mirror_transmission=0.1)
    base.update(kw)
    return ModelParams(**base)


def synthetic_trace(t, power, orientation=None):
    orientation = np.full_like(t, 0.5) if orientation is None else orientation
    return ScanTrace(t, power, power, orientation, np.zeros_like(t), meta={"kappa": 1.0})


# -- protocols --------------------------------------------------------------------------

def test_ramp_protocol():
    prot = ScanProtocol.ramp(-1.0, 0.0, 1e-3, round_trip=True)
    assert prot.kind is ScanKind.RAMP and prot.duration == pytest.approx(2000.0)
    assert prot.phi0_at(0.0, 5.0) == -1.0
    assert prot.phi0_at(500.0, 5.0) == pytest.approx(-0.5)
    assert prot.phi0_at(1000.0, 5.0) == pytest.approx(0.0)
    assert prot.phi0_at(1500.0, 5.0) == pytest.approx(-0.5)
    np.testing.assert_allclose(prot.phi0_at(np.array([0.0, 2000.0]), 5.0), [-1.0, -1.0])
    down = ScanProtocol.ramp(0.0, -1.0, 1e-3)
    assert down.phi0_at(250.0, 5.0) == pytest.approx(-0.25)


def test_static_and_drift_protocols():
    assert ScanProtocol.static(10.0).phi0_at(3.0, -0.7) == -0.7
    assert ScanProtocol.static(10.0, phi0=0.2).phi0_at(3.0, -0.7) == 0.2
    drift = ScanProtocol.atom_decay(1e-3, 100.0)
    assert drift.cooperativity_at(1000.0, 400.0) == pytest.approx(400 / math.e)
    assert ScanProtocol.static(5.0).cooperativity_at(3.0, 400.0) == 400.0


def test_quasi_static_limit():
    assert ScanProtocol.ramp(0, 1, 5e-3).is_quasi_static(0.96)
    assert not ScanProtocol.ramp(0, 1, 2e-2).is_quasi_static(0.96)


@pytest.mark.parametrize("kwargs", [
    dict(kind=ScanKind.RAMP, duration=10.0, phi0_start=0.0, ramp_rate=1e-3),
    dict(kind=ScanKind.RAMP, duration=10.0, phi0_start=0.0, phi0_end=1.0),
    dict(kind=ScanKind.STATIC, duration=0.0),
    dict(kind=ScanKind.DRIFT, duration=1.0, atom_decay_rate=-1.0),
])
def test_invalid_protocols(kwargs):
    with pytest.raises(ConfigError):
        ScanProtocol(**kwargs)


def test_integrate_validates_inputs():
    with pytest.raises(ConfigError):
        integrate(make(), ScanProtocol.static(1.0), tol=1e-2)
    with pytest.raises(ConfigError):
        integrate(make(), ScanProtocol.static(1.0), SystemState(0j, 1.5))


# -- integration --------------------------------------------------------------------------

@pytest.mark.parametrize("phi0", [0.0, 0.04, -0.1])
def test_empty_cavity_fills_like_the_linear_solution(phi0):
    params = make(phi0=phi0)
    trace = integrate(params, ScanProtocol.static(30.0), samples=301, tol=1e-10)
    a_ss = params.coupling_amplitude * params.drive / (params.gamma_cav - 1j * phi0)
    rate = params.kappa / params.gamma_cav * (params.gamma_cav - 1j * phi0)
    exact = np.abs(a_ss * (1 - np.exp(-rate * trace.times))) ** 2
    steady = lorentzian_intensity(0.1, params.drive, params.gamma_cav, phi0)
    assert np.max(np.abs(trace.intensity - exact)) < 1e-7 * steady
    assert trace.intensity[-1] == pytest.approx(steady, rel=1e-9)


def test_tolerance_convergence(lab_params):
    params = lab_params.replace(drive=drive_for_ratio(lab_params, 2.0), phi0=-1.0)
    tols = [1e-5, 1e-6, 1e-7, 1e-8, 1e-9]
    traces = [integrate(params, ScanProtocol.static(400.0), tol=t, samples=401).intensity
              for t in tols]
    diffs = [np.max(np.abs(a - b)) for a, b in zip(traces, traces[1:])]
    assert all(d1 >= 5 * d2 for d1, d2 in zip(diffs, diffs[1:])), diffs


def test_runs_are_deterministic(lab_params):
    params = lab_params.replace(drive=drive_for_ratio(lab_params, 2.0))
    prot = ScanProtocol.ramp(-1.0, -1.4, 2e-3)
    a, b = integrate(params, prot, samples=500), integrate(params, prot, samples=500)
    for name in ("times", "output_power", "intensity", "orientation", "phi_cav"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_trace_invariants_and_chaining(lab_params):
    params = lab_params.replace(drive=drive_for_ratio(lab_params, 2.0), phi0=-1.26)
    prot = ScanProtocol.static(400.0)
    whole = integrate(params, prot, samples=401, tol=1e-10)
    first = integrate(params, ScanProtocol.static(200.0), samples=201, tol=1e-10)
    second = integrate(params, ScanProtocol.static(200.0), final_state(first), samples=201,
                       tol=1e-10)
    assert second.times[0] == pytest.approx(200.0)
    assert second.intensity[-1] == pytest.approx(whole.intensity[-1], rel=1e-6)
    for tr in (whole, first, second):
        assert np.all(np.isfinite(tr.intensity)) and tr.intensity.min() >= 0
        assert tr.orientation.min() >= 0 and tr.orientation.max() <= 1


def test_output_coupling_scales_power():
    trace = integrate(make(), ScanProtocol.static(5.0), samples=50, output_coupling=0.25)
    np.testing.assert_allclose(trace.output_power, 0.25 * trace.intensity)


def test_atom_decay_moves_the_cavity_phase(lab_params):
    trace = integrate(lab_params, ScanProtocol.atom_decay(1e-3, 500.0, phi0=-1.2), samples=101)
    assert trace.phi_cav[-1] < trace.phi_cav[0]


# -- switches ---------------------------------------------------------------------------------

def test_lorentzian_sweep_has_no_switches():
    params = make(phi0=-0.5)
    trace = integrate(params, ScanProtocol.ramp(-0.5, 0.5, 1e-3), samples=2000)
    assert trace.intensity.max() > 10 * trace.intensity.min()
    assert detect_switches(trace) == []


def test_switch_detection_needs_samples():
    t = np.linspace(0, 1, 50)
    with pytest.raises(ValueError):
        detect_switches(synthetic_trace(t, t))


def test_synthetic_step_is_one_up_switch():
    t = np.linspace(0, 1000, 2001)
    power = np.where(t < 600, 1.0, 5.0)
    (event,) = detect_switches(synthetic_trace(t, power))
    assert event.direction == "up" and event.time == pytest.approx(600, abs=1)


@pytest.fixture(scope="module")
def fig2_trace():
    sc = scenario("fig2")
    return sc.params, integrate(sc.params, sc.protocol, samples=4001)


def test_hysteresis_round_trip(fig2_trace):
    params, trace = fig2_trace
    events = detect_switches(trace)
    assert [e.direction for e in events] == ["up", "down"]
    half = trace.times[-1] / 2
    assert events[0].time < half < events[1].time


def test_quasi_static_trace_follows_stable_branches(fig2_trace):
    params, trace = fig2_trace
    events = detect_switches(trace)
    guard = 20.0 / params.kappa
    fill = trace.times[0] + guard
    checked = 0
    for t, phi, intensity in zip(trace.times, trace.phi0, trace.intensity):
        if t < fill or any(abs(t - e.time) < guard for e in events):
            continue
        stable = [p.intensity for p in find_fixed_points(params.replace(phi0=float(phi)))
                  if p.stability.is_stable]
        nearest = min(stable, key=lambda s: abs(s - intensity))
        assert abs(intensity - nearest) <= 0.05 * nearest
        checked += 1
    assert checked > 0.9 * len(trace)


# -- limit cycles ------------------------------------------------------------------------------

def test_sinusoid_period_recovered():
    t, x, _ = sinusoid_trace_arrays(period=37.3, duration=1000.0, samples=5000)
    report = detect_limit_cycle(synthetic_trace(t, x))
    assert report.detected
    assert report.period == pytest.approx(37.3, rel=1e-2)
    assert report.frequency == pytest.approx(1 / 37.3, rel=1e-2)
    assert report.amplitude == pytest.approx(1.0, rel=1e-3)
    assert report.n_peaks >= 5


def test_converged_trace_has_no_cycle():
    trace = integrate(make(phi0=0.02), ScanProtocol.static(200.0), samples=400)
    report = detect_limit_cycle(trace)
    assert not report.detected
    assert math.isnan(report.frequency)


def test_short_window_is_an_error():
    t = np.linspace(0, 10, 12)
    with pytest.raises(WindowTooShortError):
        detect_limit_cycle(synthetic_trace(t, np.sin(t)))
    with pytest.raises(ValueError):
        detect_limit_cycle(synthetic_trace(t, np.sin(t)), settle_fraction=1.0)


def test_irregular_peaks_are_rejected():
    t = np.linspace(0, 1000, 20000)
    chirp = np.sin(2 * np.pi * (t / 40.0) ** 1.6)
    assert not detect_limit_cycle(synthetic_trace(t, chirp)).detected


def test_mechanism_lag_of_synthetic_pair():
    t, x, p = sinusoid_trace_arrays(period=50.0, duration=2000.0, samples=8000, phase_lag=8.0)
    trace = synthetic_trace(t, x, p)
    report = detect_limit_cycle(trace)
    mech = cycle_mechanism(trace, report)
    assert mech.orientation_period == pytest.approx(50.0, rel=1e-2)
    assert mech.intensity_period == pytest.approx(50.0, rel=1e-2)
    assert mech.lag == pytest.approx(8.0, abs=0.5)
    assert mech.orientation_swing == pytest.approx(0.2, rel=1e-3)
    with pytest.raises(ValueError):
        cycle_mechanism(trace, detect_limit_cycle(synthetic_trace(t, np.ones_like(t))))


# -- stepwise pumping ----------------------------------------------------------------------------

def test_stepwise_requires_no_relaxation_and_a_ramp(lab_params):
    with pytest.raises(ConfigError):
        stepwise_pumping_run(lab_params, ScanProtocol.ramp(-1, -2, 1e-3))
    with pytest.raises(ConfigError):
        stepwise_pumping_run(lab_params.replace(gamma_p=0.0), ScanProtocol.static(10.0))


def test_stepwise_without_light_keeps_orientation(lab_params):
    params = lab_params.replace(gamma_p=0.0, drive=0.0)
    trace = stepwise_pumping_run(params, ScanProtocol.ramp(-1, -2, 1e-2),
                                 initial=SystemState(0j, 0.3), samples=200)
    assert np.all(trace.orientation == 0.3)


def test_stepwise_orientation_never_drops(lab_params):
    params = lab_params.replace(gamma_p=0.0, drive=drive_for_ratio(lab_params, 4.0))
    trace = stepwise_pumping_run(params, ScanProtocol.ramp(-0.5, -2.0, 5e-3), samples=600)
    assert trace.orientation[-1] >= trace.orientation[0]
    assert np.all(np.diff(trace.orientation) >= -1e-12)


def test_step_analysis_of_synthetic_staircase():
    t = np.linspace(0, 300, 3001)
    bright = ((t % 100) > 40) & ((t % 100) < 50)
    power = np.where(bright, 1.0, 0.01)
    p = np.cumsum(bright) * 1e-3
    steps = analyze_steps(synthetic_trace(t, power, p))
    assert steps.nondecreasing
    assert steps.rises == 3
    assert steps.plateaus == 4
    assert steps.localized_fraction == pytest.approx(1.0, abs=1e-2)
    assert steps.total_rise == pytest.approx(p[-1])
