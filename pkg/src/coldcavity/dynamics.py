"""Time-domain runs: static phase, cavity-length ramps and atom-number drift.

A run integrates the real 3-vector ``(Re a, Im a, p)`` with the
Dormand-Prince integrator while the geometric phase and/or the
cooperativity follow a :class:`ScanProtocol`. The orientation is clipped
into [0, 1] after every step.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from coldcavity.errors import ConfigError, WindowTooShortError
from coldcavity.integrate import dopri5
from coldcavity.model import ModelParams, SystemState, cavity_phase, rates

__all__ = [
    "CycleReport",
    "ScanKind",
    "ScanProtocol",
    "ScanTrace",
    "SwitchEvent",
    "StepAnalysis",
    "analyze_steps",
    "cycle_mechanism",
    "detect_limit_cycle",
    "detect_switches",
    "integrate",
    "stepwise_pumping_run",
]

QUASI_STATIC_LIMIT = 1e-2
# pulsing must swing by this fraction of its peak; integrator noise on a
# ringing-down fixed point is far smaller
MIN_CYCLE_SWING = 1e-3


class ScanKind(str, enum.Enum):
    STATIC = "StaticPhase"
    RAMP = "LinearPhaseRamp"
    DRIFT = "AtomDecayDrift"


@dataclass(frozen=True)
class ScanProtocol:
    """How the geometric phase and the atom number evolve during a run.

    For ``RAMP`` the phase moves from ``phi0_start`` to ``phi0_end`` at
    ``ramp_rate`` (rad per 1/Gamma) and, with ``round_trip``, back again.
    ``STATIC`` and ``DRIFT`` keep the phase at ``phi0_start`` (or at the
    model's ``phi0`` when unset); ``DRIFT`` multiplies the cooperativity by
    ``exp(-atom_decay_rate t)``.
    """

    kind: ScanKind
    duration: float
    phi0_start: float | None = None
    phi0_end: float | None = None
    ramp_rate: float = 0.0
    atom_decay_rate: float = 0.0
    round_trip: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", ScanKind(self.kind))
        if not self.duration > 0:
            raise ConfigError(f"duration must be > 0, got {self.duration}")
        if self.kind is ScanKind.RAMP:
            if self.phi0_start is None or self.phi0_end is None:
                raise ConfigError("a phase ramp needs phi0_start and phi0_end")
            if not self.ramp_rate > 0:
                raise ConfigError("ramp_rate must be > 0")
        if self.atom_decay_rate < 0:
            raise ConfigError("atom_decay_rate must be >= 0")

    @classmethod
    def static(cls, duration: float, phi0: float | None = None) -> ScanProtocol:
        return cls(ScanKind.STATIC, duration, phi0_start=phi0)

    @classmethod
    def ramp(cls, start: float, end: float, rate: float, round_trip: bool = False) -> ScanProtocol:
        leg = abs(end - start) / rate
        return cls(ScanKind.RAMP, 2 * leg if round_trip else leg, phi0_start=start,
                   phi0_end=end, ramp_rate=rate, round_trip=round_trip)

    @classmethod
    def atom_decay(cls, rate: float, duration: float, phi0: float | None = None) -> ScanProtocol:
        return cls(ScanKind.DRIFT, duration, phi0_start=phi0, atom_decay_rate=rate)

    def phi0_at(self, t, default: float):
        if self.kind is not ScanKind.RAMP:
            base = default if self.phi0_start is None else self.phi0_start
            return np.full_like(np.asarray(t, dtype=float), base) if np.ndim(t) else base
        sign = 1.0 if self.phi0_end >= self.phi0_start else -1.0
        leg = abs(self.phi0_end - self.phi0_start) / self.ramp_rate
        t = np.asarray(t, dtype=float)
        forward = self.phi0_start + sign * self.ramp_rate * np.minimum(t, leg)
        if self.round_trip:
            forward = forward - sign * self.ramp_rate * np.clip(t - leg, 0.0, leg)
        return forward if forward.ndim else float(forward)

    def cooperativity_at(self, t, base: float):
        if self.kind is not ScanKind.DRIFT:
            return base if not np.ndim(t) else np.full_like(np.asarray(t, dtype=float), base)
        return base * np.exp(-self.atom_decay_rate * np.asarray(t, dtype=float))

    def is_quasi_static(self, kappa: float) -> bool:
        """Phase moves by less than 1e-2 rad per cavity lifetime."""
        return self.ramp_rate / kappa < QUASI_STATIC_LIMIT


@dataclass
class ScanTrace:
    times: np.ndarray
    output_power: np.ndarray
    intensity: np.ndarray
    orientation: np.ndarray
    phi_cav: np.ndarray
    phi0: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    def window(self, start: float, stop: float = math.inf) -> ScanTrace:
        sel = (self.times >= start) & (self.times <= stop)
        return ScanTrace(self.times[sel], self.output_power[sel], self.intensity[sel],
                         self.orientation[sel], self.phi_cav[sel],
                         None if self.phi0 is None else self.phi0[sel], dict(self.meta))


def _clip_orientation(y):
    if 0.0 <= y[2] <= 1.0:
        return y
    y = y.copy()
    y[2] = min(max(y[2], 0.0), 1.0)
    return y


def integrate(params: ModelParams, protocol: ScanProtocol, initial: SystemState | None = None,
              tol: float = 1e-8, samples: int = 2001, sample_times=None,
              output_coupling: float = 1.0, max_step: float = math.inf) -> ScanTrace:
    """Integrate the coupled field/orientation equations under ``protocol``.

    The trace is sampled on ``sample_times`` (relative to the start of the
    run) or on ``samples`` evenly spaced points over ``protocol.duration``.
    The output power is ``output_coupling * I``.
    """
    if not 1e-12 <= tol <= 1e-3:
        raise ConfigError(f"tol must lie in [1e-12, 1e-3], got {tol}")
    if initial is None:
        initial = SystemState(0j, 0.0)
    if not 0.0 <= initial.orientation <= 1.0:
        raise ConfigError("initial orientation must lie in [0, 1]")
    t0 = initial.time
    if sample_times is None:
        sample_times = np.linspace(0.0, protocol.duration, samples)
    sample_times = np.asarray(sample_times, dtype=float)

    static_phase = protocol.kind is not ScanKind.RAMP
    drift = protocol.kind is ScanKind.DRIFT
    phi0_const = protocol.phi0_at(0.0, params.phi0)
    coop = params.cooperativity

    def rhs(t, y):
        tau = t - t0
        phi0 = phi0_const if static_phase else protocol.phi0_at(tau, params.phi0)
        c = coop * math.exp(-protocol.atom_decay_rate * tau) if drift else coop
        da, dp = rates(complex(y[0], y[1]), y[2], params, phi0, c)
        return np.array([da.real, da.imag, dp])

    y0 = [initial.field.real, initial.field.imag, initial.orientation]
    sol = dopri5(rhs, t0, y0, t0 + sample_times, rtol=tol, atol=tol,
                 post_step=_clip_orientation, max_step=max_step)
    intensity = sol.y[:, 0] ** 2 + sol.y[:, 1] ** 2
    orientation = sol.y[:, 2]
    phi0 = protocol.phi0_at(sample_times, params.phi0)
    coops = protocol.cooperativity_at(sample_times, coop)
    phi_cav = np.array([cavity_phase(params, i, p, f, c).real
                        for i, p, f, c in zip(intensity, orientation, phi0, coops)])
    return ScanTrace(
        times=sample_times + t0,
        output_power=output_coupling * intensity,
        intensity=intensity,
        orientation=orientation,
        phi_cav=phi_cav,
        phi0=np.asarray(phi0, dtype=float),
        meta={"steps": sol.n_steps, "rejected": sol.n_rejected, "tol": tol,
              "kappa": params.kappa, "final_field": complex(sol.y[-1, 0], sol.y[-1, 1])},
    )


def final_state(trace: ScanTrace) -> SystemState:
    """State at the last sample, for chaining runs."""
    return SystemState(trace.meta["final_field"], float(trace.orientation[-1]), float(trace.times[-1]))


@dataclass(frozen=True)
class SwitchEvent:
    time: float
    direction: str  # "up" or "down"
    phi0: float | None = None


def detect_switches(trace: ScanTrace, kappa: float | None = None,
                    fraction: float = 0.25, lifetimes: float = 5.0,
                    settle_lifetimes: float = 20.0) -> list[SwitchEvent]:
    """Abrupt jumps of the output power.

    A jump is a change by more than ``fraction`` of the global range of the
    trace within ``lifetimes / kappa``. Each run of flagged samples becomes
    one event located at the steepest point of the jump. The first
    ``settle_lifetimes / kappa`` are skipped so that filling an initially
    dark cavity does not count.
    """
    if len(trace) < 100:
        raise ValueError("switch detection needs at least 100 samples")
    if kappa is None:
        kappa = trace.meta["kappa"]
    t, power = trace.times, trace.output_power
    span = power.max() - power.min()
    if span <= 0:
        return []
    width = max(lifetimes / kappa, float(np.min(np.diff(t))))
    change = np.interp(t + width, t, power) - power
    valid = (t + width <= t[-1]) & (t >= t[0] + settle_lifetimes / kappa)
    flags = np.where(valid & (change > fraction * span), 1,
                     np.where(valid & (change < -fraction * span), -1, 0))
    slope = np.gradient(power, t)
    events = []
    i = 0
    while i < len(flags):
        if flags[i] == 0:
            i += 1
            continue
        sign = flags[i]
        j = i
        while j + 1 < len(flags) and flags[j + 1] == sign:
            j += 1
        sel = (t >= t[i]) & (t <= t[j] + width)
        idx = np.flatnonzero(sel)
        k = idx[np.argmax(sign * slope[idx])]
        phi = None if trace.phi0 is None else float(trace.phi0[k])
        events.append(SwitchEvent(float(t[k]), "up" if sign > 0 else "down", phi))
        i = j + 1
    return events


@dataclass(frozen=True)
class CycleReport:
    detected: bool
    period: float = math.nan
    amplitude: float = 0.0
    window: tuple[float, float] = (math.nan, math.nan)
    n_peaks: int = 0
    dispersion: float = math.nan

    @property
    def frequency(self) -> float:
        return 1.0 / self.period if self.detected else math.nan

    def to_dict(self) -> dict:
        return {
            "detected": self.detected,
            "period": self.period,
            "frequency": self.frequency,
            "amplitude": self.amplitude,
            "window": list(self.window),
            "n_peaks": self.n_peaks,
            "dispersion": self.dispersion,
        }


def _refined_peak_times(t, x, idx):
    """Sub-sample peak positions from a parabola through each maximum and its neighbours."""
    out = []
    for i in idx:
        if 0 < i < len(x) - 1:
            y0, y1, y2 = x[i - 1], x[i], x[i + 1]
            curv = y0 - 2 * y1 + y2
            shift = 0.5 * (y0 - y2) / curv if curv != 0 else 0.0
            out.append(t[i] + shift * (t[i + 1] - t[i - 1]) / 2)
        else:
            out.append(t[i])
    return np.array(out)


def _peaks(t, x, min_rel_amplitude=MIN_CYCLE_SWING):
    lo, hi = float(x.min()), float(x.max())
    amplitude = hi - lo
    if amplitude <= min_rel_amplitude * max(abs(hi), abs(lo), 1e-300):
        return np.array([]), amplitude
    idx, _ = find_peaks(x, height=lo + 0.5 * amplitude, prominence=0.5 * amplitude)
    return _refined_peak_times(t, x, idx), amplitude


def detect_limit_cycle(trace: ScanTrace, settle_fraction: float = 0.5,
                       min_peaks: int = 5, max_dispersion: float = 0.1,
                       signal: str = "output_power") -> CycleReport:
    """Look for sustained periodic pulsing after discarding a settling transient.

    Peaks are maxima that rise above half the residual peak-to-trough range
    with at least that much prominence. A cycle is reported when at least
    ``min_peaks`` consecutive peaks are found whose spacings differ from
    their mean by less than ``max_dispersion`` (relative).
    """
    if not 0 < settle_fraction < 1:
        raise ValueError("settle_fraction must lie in (0, 1)")
    t_start = trace.times[0] + settle_fraction * (trace.times[-1] - trace.times[0])
    part = trace.window(t_start)
    window = (float(part.times[0]), float(part.times[-1])) if len(part) else (t_start, t_start)
    if len(part) < 8:
        raise WindowTooShortError(
            f"analysis window holds {len(part)} samples; two periods need at least 8")
    x = getattr(part, signal)
    peak_times, amplitude = _peaks(part.times, x)
    if len(peak_times) < 2:
        return CycleReport(False, amplitude=amplitude, window=window, n_peaks=len(peak_times))
    periods = np.diff(peak_times)
    mean = float(periods.mean())
    dispersion = float(np.max(np.abs(periods - mean)) / mean)
    detected = len(peak_times) >= min_peaks and dispersion < max_dispersion
    return CycleReport(detected, period=mean if detected else math.nan, amplitude=amplitude,
                       window=window, n_peaks=len(peak_times), dispersion=dispersion)


@dataclass(frozen=True)
class CycleMechanism:
    intensity_period: float
    orientation_period: float
    lag: float
    orientation_swing: float
    intensity_swing: float


def cycle_mechanism(trace: ScanTrace, report: CycleReport) -> CycleMechanism:
    """Compare orientation and intensity oscillations inside a detected cycle.

    ``lag`` is the shift (in time, within half a period) maximizing the
    cross-correlation of the two mean-removed signals; the swings are the
    peak-to-trough orientation change and the relative intensity change
    ``(max - min) / max``.
    """
    if not report.detected:
        raise ValueError("no cycle detected")
    part = trace.window(*report.window)
    t = part.times
    dt = float(np.mean(np.diff(t)))
    p_peaks, _ = _peaks(t, part.orientation, min_rel_amplitude=1e-12)
    i_peaks, _ = _peaks(t, part.intensity)
    p_period = float(np.mean(np.diff(p_peaks))) if len(p_peaks) > 1 else math.nan
    i_period = float(np.mean(np.diff(i_peaks))) if len(i_peaks) > 1 else math.nan
    a = part.intensity - part.intensity.mean()
    b = part.orientation - part.orientation.mean()
    max_shift = max(1, int(0.5 * report.period / dt))
    shifts = np.arange(-max_shift, max_shift + 1)
    corr = [np.dot(a[max(0, -s):len(a) - max(0, s)], b[max(0, s):len(b) - max(0, -s)])
            for s in shifts]
    lag = float(shifts[int(np.argmax(corr))] * dt)
    return CycleMechanism(
        intensity_period=i_period,
        orientation_period=p_period,
        lag=lag,
        orientation_swing=float(np.ptp(part.orientation)),
        intensity_swing=float(np.ptp(part.intensity) / part.intensity.max()),
    )


def stepwise_pumping_run(params: ModelParams, protocol: ScanProtocol, **kwargs) -> ScanTrace:
    """Phase ramp without orientation relaxation; ``p`` can only grow."""
    if params.gamma_p != 0:
        raise ConfigError("stepwise pumping runs require gamma_p = 0")
    if protocol.kind is not ScanKind.RAMP:
        raise ConfigError("stepwise pumping runs require a LinearPhaseRamp protocol")
    return integrate(params, protocol, **kwargs)


@dataclass(frozen=True)
class StepAnalysis:
    nondecreasing: bool
    plateaus: int
    rises: int
    localized_fraction: float
    total_rise: float


def analyze_steps(trace: ScanTrace, bright_fraction: float = 0.25,
                  flat_fraction: float = 0.02, monotone_tol: float = 1e-9) -> StepAnalysis:
    """Decompose an orientation record into rises and plateaus.

    Samples with output power above ``bright_fraction`` of the maximum are
    "bright" (light inside the cavity). A plateau is a maximal dark stretch
    over which ``p`` changes by less than ``flat_fraction`` of the total
    rise; a rise is a bright stretch. ``localized_fraction`` is the share of
    the total rise accumulated while bright.
    """
    p = trace.orientation
    power = trace.output_power
    dp = np.diff(p)
    total = float(p[-1] - p[0])
    bright = power > bright_fraction * power.max()
    # attribute each interval to bright if either end is bright
    bright_interval = bright[:-1] | bright[1:]
    localized = float(dp[bright_interval].sum() / total) if total > 0 else 0.0

    plateaus = rises = 0
    i = 0
    n = len(bright)
    while i < n:
        j = i
        while j + 1 < n and bright[j + 1] == bright[i]:
            j += 1
        if bright[i]:
            rises += 1
        elif j > i and (total <= 0 or (p[j] - p[i]) < flat_fraction * total):
            plateaus += 1
        i = j + 1
    return StepAnalysis(
        nondecreasing=bool(np.all(dp >= -monotone_tol)),
        plateaus=plateaus,
        rises=rises,
        localized_fraction=localized,
        total_rise=total,
    )
