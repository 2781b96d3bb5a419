"""Zeeman-sublevel rate equations for sigma+ optical pumping on F -> F' = F + 1.

Only populations are tracked (no Zeeman coherences). Ground sublevel ``m``
is excited to ``m + 1`` at rate

    R_m = (Gamma / 2) I c_m / (1 + delta**2 + 2 I c_m),

with ``c_m`` the squared Clebsch-Gordan coefficient of that sigma+ line, and
every excited sublevel decays at rate Gamma with the usual dipole branching
ratios. The stretched pair ``|F, F>``/``|F', F'>`` is a closed cycle, so the
population ``N`` it holds never decreases.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, null_space
from scipy.optimize import curve_fit

from coldcavity.errors import FitError
from coldcavity.integrate import dopri5

__all__ = [
    "FIG5_INTENSITIES",
    "PumpTrajectory",
    "SublevelPopulations",
    "beta_for",
    "branching_weights",
    "cg_squared_sigma_plus",
    "clebsch_gordan",
    "equilibrium",
    "evolve_populations",
    "extract_beta",
    "fit_rise_rate",
    "rate_matrix",
]

F_GROUND = 4
FIG5_INTENSITIES = (1, 5, 10, 12, 15, 20, 30, 40, 60)
FIG5_DELTA = 40.0
# samples per fitted curve; the 10%-90% window edges jitter the fit by ~1e-3 at 800
BETA_SAMPLES = 4000


def clebsch_gordan(j1, m1, j2, m2, j, m) -> float:
    """``<j1 m1; j2 m2 | j m>`` for integer angular momenta (Racah formula)."""
    if m1 + m2 != m or not abs(j1 - j2) <= j <= j1 + j2:
        return 0.0
    if abs(m1) > j1 or abs(m2) > j2 or abs(m) > j:
        return 0.0
    f = math.factorial
    prefactor = ((2 * j + 1) * f(j + j1 - j2) * f(j - j1 + j2) * f(j1 + j2 - j)
                 / f(j1 + j2 + j + 1))
    prefactor *= (f(j + m) * f(j - m) * f(j1 - m1) * f(j1 + m1)
                  * f(j2 - m2) * f(j2 + m2))
    total = 0.0
    for k in range(0, j1 + j2 - j + 1):
        terms = (j1 + j2 - j - k, j1 - m1 - k, j2 + m2 - k,
                 j - j2 + m1 + k, j - j1 - m2 + k)
        if min(terms) < 0:
            continue
        denom = f(k)
        for n in terms:
            denom *= f(n)
        total += (-1) ** k / denom
    return math.sqrt(prefactor) * total


def cg_squared_sigma_plus(m: int, f_ground: int = F_GROUND) -> float:
    """Squared CG coefficient of ``|F, m> -> |F+1, m+1>``.

    Equals ``(m + F + 1)(m + F + 2) / ((2F + 1)(2F + 2))``; the stretched
    line ``m = F`` has strength 1.
    """
    if not -f_ground <= m <= f_ground or int(m) != m:
        raise ValueError(f"m must be an integer in [-{f_ground}, {f_ground}], got {m}")
    return (m + f_ground + 1) * (m + f_ground + 2) / ((2 * f_ground + 1) * (2 * f_ground + 2))


def branching_weights(m_excited: int, f_ground: int = F_GROUND) -> tuple[float, float, float]:
    """Decay weights of ``|F+1, m'>`` into ``m' + 1``, ``m'``, ``m' - 1``.

    Returned in (sigma-, pi, sigma+) order of the emitted photon.
    """
    f_exc = f_ground + 1
    if not -f_exc <= m_excited <= f_exc or int(m_excited) != m_excited:
        raise ValueError(f"m' must be an integer in [-{f_exc}, {f_exc}], got {m_excited}")
    weights = []
    for q in (-1, 0, 1):
        m = m_excited - q
        weights.append(clebsch_gordan(f_ground, m, 1, q, f_exc, m_excited) ** 2
                       if abs(m) <= f_ground else 0.0)
    total = sum(weights)
    return tuple(w / total for w in weights)


@dataclass(frozen=True)
class SublevelPopulations:
    ground: np.ndarray
    excited: np.ndarray

    def __post_init__(self):
        ground = np.asarray(self.ground, dtype=float)
        excited = np.asarray(self.excited, dtype=float)
        if excited.size != ground.size + 2:
            raise ValueError("excited manifold must have two more sublevels than the ground")
        if np.any(ground < 0) or np.any(excited < 0):
            raise ValueError("populations must be nonnegative")
        if abs(ground.sum() + excited.sum() - 1.0) > 1e-9:
            raise ValueError("populations must sum to 1")
        object.__setattr__(self, "ground", ground)
        object.__setattr__(self, "excited", excited)

    @classmethod
    def uniform_ground(cls, f_ground: int = F_GROUND) -> SublevelPopulations:
        n = 2 * f_ground + 1
        return cls(np.full(n, 1.0 / n), np.zeros(n + 2))

    @classmethod
    def from_vector(cls, vector, f_ground: int = F_GROUND) -> SublevelPopulations:
        n = 2 * f_ground + 1
        return cls(vector[:n], vector[n:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.ground, self.excited])

    @property
    def stretched(self) -> float:
        return float(self.ground[-1] + self.excited[-1])


@dataclass
class PumpTrajectory:
    times: np.ndarray
    stretched: np.ndarray
    populations: np.ndarray | None = None
    intensity: float | None = None
    delta: float | None = None
    meta: dict = field(default_factory=dict)


def excitation_rates(intensity, delta, f_ground=F_GROUND):
    """sigma+ excitation rate from every ground sublevel (units of Gamma)."""
    cg2 = np.array([cg_squared_sigma_plus(m, f_ground) for m in range(-f_ground, f_ground + 1)])
    return 0.5 * intensity * cg2 / (1.0 + delta ** 2 + 2.0 * intensity * cg2)


@functools.lru_cache(maxsize=8)
def _decay_block(f_ground):
    n_g = 2 * f_ground + 1
    n_e = n_g + 2
    block = np.zeros((n_g, n_e))
    for j, m_exc in enumerate(range(-f_ground - 1, f_ground + 2)):
        for q, w in zip((-1, 0, 1), branching_weights(m_exc, f_ground)):
            m = m_exc - q
            if w:
                block[m + f_ground, j] = w
    return block


def rate_matrix(intensity: float, delta: float, f_ground: int = F_GROUND) -> np.ndarray:
    """Generator ``M`` of ``d rho / dt = M rho`` for the stacked (ground, excited) vector.

    Columns sum to zero, so total population is conserved exactly.
    """
    n_g = 2 * f_ground + 1
    n = 2 * n_g + 2
    rates = excitation_rates(intensity, delta, f_ground)
    mat = np.zeros((n, n))
    for i, r in enumerate(rates):
        mat[i, i] -= r
        mat[n_g + i + 2, i] += r  # m -> m' = m + 1 (excited index offset by F' - F)
    mat[:n_g, n_g:] += _decay_block(f_ground)
    mat[np.arange(n_g, n), np.arange(n_g, n)] -= 1.0
    return mat


def equilibrium(intensity: float, delta: float, f_ground: int = F_GROUND) -> np.ndarray:
    """Stationary population vector (null vector of the rate matrix)."""
    basis = null_space(rate_matrix(intensity, delta, f_ground))
    if basis.shape[1] != 1:
        raise FitError(f"rate matrix has a {basis.shape[1]}-dimensional null space")
    vec = basis[:, 0]
    vec = np.clip(vec / vec.sum(), 0.0, None)  # drop roundoff-level negatives
    return vec / vec.sum()


def evolve_populations(initial: SublevelPopulations, intensity: float, delta: float,
                       t_end: float, n_points: int = 400, rtol: float = 1e-8,
                       keep_populations: bool = True, method: str = "expm") -> PumpTrajectory:
    """Propagate the rate equations from ``initial`` to ``t_end``.

    ``method="expm"`` applies the exact one-interval propagator
    ``expm(M dt)`` repeatedly on the uniform output grid. The fastest rates
    are ~Gamma while pumping takes 1e3-1e5 / Gamma, so an explicit
    integrator is stability bound; ``method="rk"`` runs the adaptive
    Dormand-Prince integrator instead and is kept for cross-checks.
    """
    if intensity < 0:
        raise ValueError("intensity must be >= 0")
    if t_end <= 0:
        raise ValueError("t_end must be > 0")
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    f_ground = (initial.ground.size - 1) // 2
    mat = rate_matrix(intensity, delta, f_ground)
    times = np.linspace(0.0, t_end, n_points)
    meta = {"method": method}
    if method == "expm":
        step = expm(mat * (times[1] - times[0]))
        pops = np.empty((n_points, mat.shape[0]))
        pops[0] = initial.as_vector()
        for i in range(1, n_points):
            pops[i] = step @ pops[i - 1]
    elif method == "rk":
        sol = dopri5(lambda t, y: mat @ y, 0.0, initial.as_vector(), times,
                     rtol=rtol, atol=rtol * 1e-3)
        pops = sol.y
        meta.update(steps=sol.n_steps, rejected=sol.n_rejected)
    else:
        raise ValueError(f"unknown method {method!r}; expected 'expm' or 'rk'")
    stretched = pops[:, 2 * f_ground] + pops[:, -1]
    return PumpTrajectory(times, stretched, pops if keep_populations else None,
                          intensity=intensity, delta=delta, meta=meta)


def _rise(t, p_inf, p0, rate):
    return p_inf - (p_inf - p0) * np.exp(-rate * t)


def fit_rise_rate(times, values, lower=0.1, upper=0.9) -> float:
    """Rate of a single-exponential fit to the part of a rising curve
    between ``lower`` and ``upper`` fractions of its span."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    start, end = values[0], values[-1]
    span = end - start
    if abs(span) < 1e-3:
        raise FitError(f"curve spans only {span:.3g}; nothing to fit")
    frac = (values - start) / span
    window = (frac >= lower) & (frac <= upper)
    if window.sum() < 4:
        raise FitError("fewer than 4 samples inside the fit window")
    t_w = times[window]
    v_w = values[window]
    # fit in units of the window length so all three parameters are O(1)
    t_scale = max(t_w[-1] - t_w[0], 1e-300)
    guess = math.log((1 - lower) / (1 - upper))
    try:
        popt, _ = curve_fit(_rise, (t_w - t_w[0]) / t_scale, v_w,
                            p0=(end, v_w[0], guess), maxfev=20000, xtol=1e-12, ftol=1e-12)
    except RuntimeError as exc:
        raise FitError(str(exc)) from exc
    rate = popt[2] / t_scale
    if not rate > 0:
        raise FitError(f"fit produced a non-positive rate {rate}")
    return float(rate)


def extract_beta(trajectory: PumpTrajectory, intensity: float) -> float:
    """Pumping coefficient ``beta = r / I`` from the rise of the stretched population."""
    if intensity <= 0:
        raise ValueError("intensity must be > 0")
    return fit_rise_rate(trajectory.times, trajectory.stretched) / intensity


def pumping_time_scale(intensity: float, delta: float, f_ground: int = F_GROUND) -> float:
    """Slowest relaxation time of the rate equations (``1 / |lambda|`` of the
    slowest nonzero eigenvalue); used to pick integration windows."""
    eig = np.linalg.eigvals(rate_matrix(intensity, delta, f_ground)).real
    slow = np.sort(np.abs(eig))[1]
    return 1.0 / slow


@functools.lru_cache(maxsize=64)
def beta_for(delta: float, intensity: float = 10.0) -> float:
    """Fitted pumping coefficient at one intensity, from a uniform start."""
    t_end = 8.0 * pumping_time_scale(intensity, delta)
    traj = evolve_populations(SublevelPopulations.uniform_ground(), intensity, delta,
                              t_end, n_points=BETA_SAMPLES, keep_populations=False)
    return extract_beta(traj, intensity)
