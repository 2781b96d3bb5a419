"""Fixed points, bistability threshold and linear stability.

The steady orientation ``p*(I)`` is a rational function of ``I``; writing
``1 + p* = M(I) / D(I)`` and clearing denominators turns the field
steady-state condition

    |t a_in|**2 = (gamma_eff(I)**2 + Phi(I)**2) I

into a single polynomial in ``I`` (degree <= 5 for both variants). All of
its roots are found from the companion matrix and then polished, first on
the polynomial and then with Newton iterations on the full real vector
field, so every branch is returned rather than whichever one a
continuation seed happens to reach.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial

from coldcavity.errors import NoBistabilityError, NumericalError, RootFindingError
from coldcavity.model import (
    ModelParams,
    Variant,
    cavity_phase,
    kerr_coefficient,
    local_jacobian,
    rates,
)

__all__ = [
    "BranchDiagram",
    "FixedPoint",
    "Stability",
    "StabilityMap",
    "bistability_threshold",
    "branch_diagram",
    "classify_stability",
    "find_fixed_points",
    "has_unstable_pair",
    "input_intensity",
    "instability_map",
    "jacobian",
    "peak_intensity",
    "steady_state_polynomial",
]

IMAG_TOL = 1e-8
NEG_TOL = 1e-10
RESIDUAL_TOL = 1e-9
TURNING_POINT_TOL = 1e-6
COEF_TRIM = 1e-15


class Stability(str, enum.Enum):
    STABLE_NODE = "StableNode"
    STABLE_FOCUS = "StableFocus"
    SADDLE = "Saddle"
    UNSTABLE_FOCUS = "UnstableFocus"
    UNSTABLE_NODE = "UnstableNode"

    @property
    def is_stable(self) -> bool:
        return self in (Stability.STABLE_NODE, Stability.STABLE_FOCUS)


@dataclass(frozen=True)
class FixedPoint:
    intensity: float
    orientation: float
    phase: float
    field: complex
    eigenvalues: np.ndarray
    stability: Stability
    multiplicity: int = 1
    residual: float = 0.0


def peak_intensity(params: ModelParams) -> float:
    """Intracavity intensity of the empty cavity on resonance, ``t**2 a_in**2 / gamma_cav**2``."""
    return (params.coupling_amplitude * params.drive / params.gamma_cav) ** 2


def input_intensity(params: ModelParams) -> float:
    """Drive expressed as ``t**2 a_in**2 / gamma_cav``.

    This is the quantity compared with :func:`bistability_threshold`; it is
    ``gamma_cav`` times :func:`peak_intensity`.
    """
    return (params.coupling_amplitude * params.drive) ** 2 / params.gamma_cav


def bistability_threshold(params: ModelParams) -> float:
    """Pure-Kerr threshold ``8 gamma_cav**2 / (3 sqrt(3) K)`` on :func:`input_intensity`."""
    kerr = kerr_coefficient(params)
    if kerr <= 0:
        raise NoBistabilityError(f"K = {kerr:.3g} <= 0: no Kerr bistability threshold")
    return 8.0 * params.gamma_cav ** 2 / (3.0 * math.sqrt(3.0) * kerr)


def _orientation_mode(params):
    """'fixed' with the constant orientation, or 'pumped'."""
    if params.beta == 0:
        return "fixed", 0.0
    if params.gamma_p == 0:
        return "fixed", 1.0
    return "pumped", None


def _orientation_polys(params, scale):
    """(D, M) with ``1 + p*(I) = M / D`` as polynomials in ``u = I / scale``."""
    mode, p_fixed = _orientation_mode(params)
    if mode == "fixed":
        return Polynomial([1.0]), Polynomial([1.0 + p_fixed])
    gp, b = params.gamma_p, params.beta
    if params.variant is Variant.SIMPLE:
        den, num = Polynomial([gp, b * scale]), Polynomial([gp, 2 * b * scale])
    else:
        s0 = 1.0 + params.delta ** 2
        b_sat = b * s0
        sat = Polynomial([s0, 2 * scale])
        den = gp * sat + Polynomial([0, b_sat * scale])
        num = gp * sat + Polynomial([0, 2 * b_sat * scale])
    # common factor: keeps subnormal rates from underflowing the product
    norm = max(np.max(np.abs(den.coef)), np.max(np.abs(num.coef)))
    return den / norm, num / norm


def steady_orientation(params: ModelParams, intensity: float) -> float:
    mode, p_fixed = _orientation_mode(params)
    if mode == "fixed":
        return p_fixed
    if params.variant is Variant.SIMPLE:
        r = params.beta * intensity
    else:
        s0 = 1.0 + params.delta ** 2
        r = params.beta * s0 * intensity / (s0 + 2.0 * intensity)
    return r / (params.gamma_p + r)


def _intensity_scale(params):
    peak = peak_intensity(params)
    return peak if peak > 0 else 1.0


def steady_state_polynomial(params: ModelParams, scale: float = 1.0) -> Polynomial:
    """Polynomial in ``u = I / scale`` whose nonnegative real roots are the steady intensities."""
    y_in = (params.coupling_amplitude * params.drive) ** 2
    den, num = _orientation_polys(params, scale)
    u = Polynomial([0.0, scale])  # I as a polynomial in u
    g = params.gamma_cav
    a_coef = 2.0 * params.cooperativity * g
    if params.variant is Variant.SIMPLE:
        lin = a_coef / params.delta
        kerr = 2.0 * lin / params.delta ** 2
        phase_times_den = (params.phi0 - kerr * u) * den + lin * num
        poly = u * ((g * den) ** 2 + phase_times_den ** 2) - y_in * den ** 2
    else:
        sat = Polynomial([1.0 + params.delta ** 2, 2.0 * scale])
        loss = g * sat * den + a_coef * num
        phase = params.phi0 * sat * den + a_coef * params.delta * num
        poly = u * (loss ** 2 + phase ** 2) - y_in * (sat * den) ** 2
    return poly.trim(0.0)


def _polish_polynomial_root(poly, deriv, z):
    fz = poly(z)
    for _ in range(60):
        dz = deriv(z)
        # a near-zero slope (double root) gives no useful Newton step
        if abs(dz) <= 1e-300 * max(abs(fz), 1.0):
            break
        with np.errstate(over="ignore", invalid="ignore"):
            step = fz / dz
        if not np.isfinite(step):
            break
        # damped Newton: halve until the residual stops growing
        for _ in range(30):
            z_new = z - step
            f_new = poly(z_new)
            if abs(f_new) <= abs(fz):
                break
            step *= 0.5
        else:
            break
        z, fz = z_new, f_new
        if abs(step) <= 1e-15 * max(abs(z), 1e-300):
            break
    return z


def _real_roots(params):
    scale = _intensity_scale(params)
    poly = steady_state_polynomial(params, scale)
    if poly.degree() < 1:
        raise RootFindingError("steady-state polynomial is degenerate")
    coef = poly.coef / np.max(np.abs(poly.coef))
    # physical roots lie in 0 <= u <= 1 (I never exceeds the empty-cavity peak),
    # where terms below roundoff cannot move them; dropping such leading
    # coefficients removes huge spurious roots that overflow the companion matrix
    while len(coef) > 2 and abs(coef[-1]) < COEF_TRIM:
        coef = coef[:-1]
    poly = Polynomial(coef)
    deriv = poly.deriv()
    try:
        raw = poly.roots()  # companion-matrix eigenvalues
    except np.linalg.LinAlgError as exc:
        raise RootFindingError(f"companion eigenvalue solver failed: {exc}") from exc
    found = []
    for z in raw:
        z = _polish_polynomial_root(poly, deriv, complex(z))
        intensity = z * scale
        if (abs(intensity.imag) < IMAG_TOL * max(1.0, abs(intensity.real))
                and -NEG_TOL <= intensity.real <= scale * (1.0 + IMAG_TOL)):
            found.append(max(intensity.real, 0.0))
    found.sort()
    merged = []
    for value in found:
        if merged and abs(value - merged[-1][0]) <= 1e-7 * max(1.0, value):
            merged[-1][1] += 1
        else:
            merged.append([value, 1])
    return merged


def _steady_field(params, intensity, orientation):
    phase = cavity_phase(params, intensity, orientation)
    return params.coupling_amplitude * params.drive / (params.gamma_cav - 1j * phase)


def _residual(params, field_value, orientation):
    da, dp = rates(field_value, orientation, params)
    return max(abs(da), abs(dp))


def _newton_refine(params, field_value, orientation):
    """Newton on the real 3-D vector field (2-D when the orientation is frozen)."""
    state = np.array([field_value.real, field_value.imag, orientation])
    frozen = _orientation_mode(params)[0] == "fixed"
    for _ in range(20):
        a = complex(state[0], state[1])
        da, dp = rates(a, state[2], params)
        if max(abs(da), abs(dp)) < 1e-13 * max(1.0, abs(a)):
            break
        jac = local_jacobian(a, state[2], params)
        if frozen:
            step = np.zeros(3)
            step[:2] = np.linalg.solve(jac[:2, :2], [da.real, da.imag])
        else:
            step = np.linalg.solve(jac, [da.real, da.imag, dp])
        state = state - step
        if np.linalg.norm(step) <= 1e-15 * max(1.0, np.linalg.norm(state)):
            break
    state[2] = min(max(state[2], 0.0), 1.0)
    return complex(state[0], state[1]), float(state[2])


def jacobian(point: FixedPoint, params: ModelParams) -> np.ndarray:
    """3x3 real Jacobian at ``point`` in coordinates (Re a, Im a, p)."""
    return local_jacobian(point.field, point.orientation, params)


def classify_stability(eigenvalues, tol: float = 1e-9) -> Stability:
    """Classify a fixed point from its Jacobian spectrum.

    A complex pair makes it a focus (stable/unstable by the largest real
    part); otherwise real parts of mixed sign make a saddle. Real parts
    within ``tol`` (relative to the spectral radius) count as zero and
    zero counts as stable, so a frozen orientation does not flip the class.
    """
    eig = np.asarray(eigenvalues, dtype=complex)
    radius = float(np.max(np.abs(eig))) if eig.size else 0.0
    cut = tol * max(radius, 1e-300)
    max_re = float(np.max(eig.real))
    unstable = max_re > cut
    if np.any(np.abs(eig.imag) > cut):
        return Stability.UNSTABLE_FOCUS if unstable else Stability.STABLE_FOCUS
    if not unstable:
        return Stability.STABLE_NODE
    if np.all(eig.real > cut):
        return Stability.UNSTABLE_NODE
    return Stability.SADDLE


def has_unstable_pair(point: FixedPoint, tol: float = 1e-9) -> bool:
    """True when a complex eigenvalue pair has a positive real part.

    This is the oscillatory (Hopf-type) instability. A saddle-focus whose
    complex pair is damped is still classed ``UnstableFocus`` by
    :func:`classify_stability` but fails this test.
    """
    eig = np.asarray(point.eigenvalues, dtype=complex)
    cut = tol * max(float(np.max(np.abs(eig))), 1e-300)
    return bool(np.any((np.abs(eig.imag) > cut) & (eig.real > cut)))


def _make_point(params, intensity, orientation, a, multiplicity):
    jac = local_jacobian(a, orientation, params)
    eig = np.linalg.eigvals(jac)
    return FixedPoint(
        intensity=intensity,
        orientation=orientation,
        phase=float(cavity_phase(params, intensity, orientation).real),
        field=a,
        eigenvalues=eig,
        stability=classify_stability(eig),
        multiplicity=multiplicity,
        residual=_residual(params, a, orientation),
    )


def find_fixed_points(params: ModelParams) -> list[FixedPoint]:
    """All steady states, sorted by intensity, with eigenvalues and class."""
    if params.drive == 0:
        # dark cavity; with gamma_p = 0 every orientation is stationary and p = 0 is reported
        return [_make_point(params, 0.0, 0.0, 0j, 1)]
    points = []
    for intensity, mult in _real_roots(params):
        p = steady_orientation(params, intensity)
        a = _steady_field(params, intensity, p)
        a, p = _newton_refine(params, a, p)
        point = _make_point(params, abs(a) ** 2, p, a, mult)
        if point.residual >= RESIDUAL_TOL:
            raise RootFindingError(
                f"fixed point at I={intensity:.6g} has residual {point.residual:.3g}")
        points.append(point)
    if not points:
        raise RootFindingError("no physical steady state found")
    return points


def fixed_point_count(params: ModelParams) -> int:
    """Number of steady states counted with multiplicity."""
    return sum(p.multiplicity for p in find_fixed_points(params))


@dataclass
class BranchDiagram:
    phi0_grid: np.ndarray
    branches: list[list[FixedPoint]]
    turning_points: list[float] = field(default_factory=list)

    @property
    def counts(self) -> np.ndarray:
        return np.array([sum(p.multiplicity for p in b) for b in self.branches])


def _refine_turning_point(params, lo, hi, n_lo):
    while hi - lo > TURNING_POINT_TOL:
        mid = 0.5 * (lo + hi)
        if fixed_point_count(params.replace(phi0=mid)) == n_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def branch_diagram(params: ModelParams, phi0_grid) -> BranchDiagram:
    """Fixed points along a sweep of the geometric phase, with turning points."""
    phi0_grid = np.asarray(phi0_grid, dtype=float)
    branches = [find_fixed_points(params.replace(phi0=float(phi))) for phi in phi0_grid]
    counts = [sum(p.multiplicity for p in b) for b in branches]
    turning = []
    for i in range(len(phi0_grid) - 1):
        if counts[i] != counts[i + 1]:
            turning.append(_refine_turning_point(params, phi0_grid[i], phi0_grid[i + 1], counts[i]))
    return BranchDiagram(phi0_grid, branches, turning)


@dataclass
class StabilityMap:
    """Fixed-point classes on a (drive, phi0) grid; arrays are indexed [drive, phi0]."""

    phi0: np.ndarray
    drive: np.ndarray
    n_roots: np.ndarray
    classes: np.ndarray
    failed: np.ndarray

    def contains(self, stability: Stability) -> np.ndarray:
        return np.vectorize(lambda cell: stability in cell, otypes=[bool])(self.classes)

    def rows(self):
        """(phi0, drive, n_roots, classes) per cell, phi0 varying fastest."""
        for j, d in enumerate(self.drive):
            for i, phi in enumerate(self.phi0):
                label = "failed" if self.failed[j, i] else ";".join(s.value for s in self.classes[j, i])
                yield float(phi), float(d), int(self.n_roots[j, i]), label


def _map_row(args):
    params, phi0_values, drive = args
    n_roots, classes, failed = [], [], []
    for phi in phi0_values:
        try:
            pts = find_fixed_points(params.replace(phi0=float(phi), drive=float(drive)))
        except NumericalError:
            n_roots.append(0)
            classes.append(())
            failed.append(True)
            continue
        n_roots.append(sum(p.multiplicity for p in pts))
        classes.append(tuple(p.stability for p in pts))
        failed.append(False)
    return n_roots, classes, failed


def instability_map(params: ModelParams, phi0_values, drive_values,
                    workers: int | None = None) -> StabilityMap:
    """Classify every steady state on a grid of geometric phase and drive.

    Cells where the root finder fails are flagged in ``failed`` rather than
    aborting the sweep. ``workers > 1`` evaluates drive rows in separate
    processes; the result does not depend on the worker count.
    """
    phi0_values = np.asarray(phi0_values, dtype=float)
    drive_values = np.asarray(drive_values, dtype=float)
    if phi0_values.size == 0 or drive_values.size == 0:
        raise ValueError("phi0 and drive ranges must be nonempty")
    jobs = [(params, phi0_values, d) for d in drive_values]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_map_row, jobs))
    else:
        rows = [_map_row(job) for job in jobs]
    shape = (drive_values.size, phi0_values.size)
    classes = np.empty(shape, dtype=object)
    for j, (_, cls, _) in enumerate(rows):
        for i, c in enumerate(cls):
            classes[j, i] = c
    return StabilityMap(
        phi0=phi0_values,
        drive=drive_values,
        n_roots=np.array([r[0] for r in rows], dtype=int).reshape(shape),
        classes=classes,
        failed=np.array([r[2] for r in rows], dtype=bool).reshape(shape),
    )


def grid(start: float, stop: float, resolution: int) -> np.ndarray:
    if resolution < 1:
        raise ValueError("resolution must be positive")
    return np.linspace(start, stop, resolution)
