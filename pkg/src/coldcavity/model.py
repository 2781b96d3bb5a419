"""Dimensionless cavity/orientation model.

Time is measured in units of 1/Gamma (the excited-state linewidth), the
intracavity field is stored as ``a = 2 g alpha / Gamma`` so that
``|a|**2`` is the saturation-normalized intensity ``I``, and the drive
amplitude is scaled the same way.

Two variants share the same state space:

* ``Variant.SIMPLE``: linear + Kerr phase, ``Phi = Phi0 + Phi_L (1 + p) - K I``
  and pumping rate ``beta * I``.
* ``Variant.SATURATED``: complex two-level phase
  ``Phi_1 = 2 C gamma_cav (delta + i) / (1 + delta**2 + 2 I)``,
  ``Phi = Phi0 + Phi_1 (1 + p)`` and saturated pumping
  ``beta_sat I / (1 + delta**2 + 2 I)`` with ``beta_sat = beta (1 + delta**2)``.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass

import numpy as np

from coldcavity.errors import ConfigError, DegenerateDetuningError

__all__ = [
    "ModelParams",
    "SystemState",
    "Variant",
    "cavity_phase",
    "field_rhs",
    "kerr_coefficient",
    "linear_phase",
    "local_jacobian",
    "orientation_rhs",
    "phi1_saturated",
    "pumping_rate",
    "rates",
    "total_phase_simple",
]


class Variant(str, enum.Enum):
    SIMPLE = "simple"
    SATURATED = "saturated"


@dataclass(frozen=True)
class ModelParams:
    """All dimensionless model constants.

    Attributes
    ----------
    delta : float
        Atomic detuning ``2 (omega_0 - omega_L) / Gamma``.
    phi0 : float
        Geometric round-trip phase (rad).
    gamma_cav : float
        Round-trip field loss coefficient (``t**2 / 2`` plus other losses).
    kappa : float
        Cavity field decay rate ``gamma_cav / tau`` in units of Gamma.
    cooperativity : float
        Bistability parameter ``C = g**2 N / (gamma_cav Gamma)``.
    beta : float
        Pumping rate per unit normalized intensity (units of Gamma).
    gamma_p : float
        Orientation relaxation rate (units of Gamma).
    drive : float
        Input field amplitude ``a_in``, scaled like the intracavity field.
    variant : Variant
    mirror_transmission : float or None
        Intensity transmission ``t**2`` of the coupling mirror. ``None``
        means a single-port cavity, ``t**2 = 2 gamma_cav``.
    """

    delta: float
    phi0: float
    gamma_cav: float
    kappa: float
    cooperativity: float
    beta: float
    gamma_p: float
    drive: float
    variant: Variant = Variant.SIMPLE
    mirror_transmission: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        for name in ("delta", "phi0", "gamma_cav", "kappa", "cooperativity",
                     "beta", "gamma_p", "drive"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ConfigError(f"{name} must be finite, got {value!r}")
        if self.gamma_cav <= 0:
            raise ConfigError(f"gamma_cav must be > 0, got {self.gamma_cav}")
        if self.kappa <= 0:
            raise ConfigError(f"kappa must be > 0, got {self.kappa}")
        if self.beta < 0 or self.gamma_p < 0:
            raise ConfigError("beta and gamma_p must be >= 0")
        if self.cooperativity < 0:
            raise ConfigError(f"cooperativity must be >= 0, got {self.cooperativity}")
        if self.drive < 0:
            raise ConfigError(f"drive must be >= 0, got {self.drive}")
        if self.variant is Variant.SIMPLE and self.delta == 0:
            raise DegenerateDetuningError("the simple variant requires delta != 0")
        if self.mirror_transmission is not None and not 0 < self.mirror_transmission <= 1:
            raise ConfigError("mirror_transmission must lie in (0, 1]")

    @property
    def coupling_amplitude(self) -> float:
        """Amplitude transmission ``t`` of the coupling mirror."""
        t2 = self.mirror_transmission
        if t2 is None:
            t2 = 2.0 * self.gamma_cav
        return math.sqrt(t2)

    @property
    def saturation_denominator(self) -> float:
        """``1 + delta**2`` (low-intensity limit of ``1 + delta**2 + 2 I``)."""
        return 1.0 + self.delta * self.delta

    def replace(self, **changes) -> ModelParams:
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class SystemState:
    field: complex
    orientation: float
    time: float = 0.0

    @property
    def intensity(self) -> float:
        return self.field.real ** 2 + self.field.imag ** 2


def _require_detuning(delta):
    if delta == 0:
        raise DegenerateDetuningError("linear and Kerr phases diverge at delta = 0")


def linear_phase(params: ModelParams) -> float:
    """Linear atomic phase shift ``2 C gamma_cav / delta``."""
    _require_detuning(params.delta)
    return 2.0 * params.cooperativity * params.gamma_cav / params.delta


def kerr_coefficient(params: ModelParams) -> float:
    """Kerr coefficient ``K = 4 C gamma_cav / delta**3``."""
    _require_detuning(params.delta)
    return 4.0 * params.cooperativity * params.gamma_cav / params.delta ** 3


def total_phase_simple(params: ModelParams, intensity: float, orientation: float) -> float:
    return (params.phi0 + linear_phase(params) * (1.0 + orientation)
            - kerr_coefficient(params) * intensity)


def phi1_saturated(params: ModelParams, intensity: float) -> complex:
    """Complex two-level phase; the imaginary part is the absorption loss."""
    return _phi1(params.cooperativity, params.gamma_cav, params.delta, intensity)


def _phi1(cooperativity, gamma_cav, delta, intensity):
    return (2.0 * cooperativity * gamma_cav * complex(delta, 1.0)
            / (1.0 + delta * delta + 2.0 * intensity))


def cavity_phase(params: ModelParams, intensity: float, orientation: float,
                 phi0: float | None = None, cooperativity: float | None = None) -> complex:
    """Round-trip phase for either variant (complex for the saturated one).

    ``phi0`` and ``cooperativity`` override the values in ``params``; time
    dependent scan protocols use this to avoid rebuilding parameter objects.
    """
    if phi0 is None:
        phi0 = params.phi0
    if cooperativity is None:
        cooperativity = params.cooperativity
    if params.variant is Variant.SIMPLE:
        lin = 2.0 * cooperativity * params.gamma_cav / params.delta
        kerr = 2.0 * lin / (params.delta * params.delta)
        return complex(phi0 + lin * (1.0 + orientation) - kerr * intensity, 0.0)
    return phi0 + _phi1(cooperativity, params.gamma_cav, params.delta, intensity) * (1.0 + orientation)


def pumping_rate(params: ModelParams, intensity: float) -> float:
    """Intensity-dependent pumping rate ``r(I)`` in ``dp/dt = -gamma_p p + r(I)(1 - p)``."""
    if params.variant is Variant.SIMPLE:
        return params.beta * intensity
    s = 1.0 + params.delta * params.delta
    return params.beta * s * intensity / (s + 2.0 * intensity)


def _pumping_rate_derivative(params, intensity):
    if params.variant is Variant.SIMPLE:
        return params.beta
    s = 1.0 + params.delta * params.delta
    return params.beta * s * s / (s + 2.0 * intensity) ** 2


def rates(field: complex, orientation: float, params: ModelParams,
          phi0: float | None = None, cooperativity: float | None = None) -> tuple[complex, float]:
    """Time derivatives ``(da/dt, dp/dt)`` at one point of state space."""
    intensity = field.real * field.real + field.imag * field.imag
    phase = cavity_phase(params, intensity, orientation, phi0, cooperativity)
    g = params.gamma_cav
    dfield = (params.kappa / g) * (params.coupling_amplitude * params.drive
                                   - (g - 1j * phase) * field)
    dp = -params.gamma_p * orientation + pumping_rate(params, intensity) * (1.0 - orientation)
    return dfield, dp


def field_rhs(state: SystemState, params: ModelParams) -> complex:
    return rates(state.field, state.orientation, params)[0]


def orientation_rhs(state: SystemState, params: ModelParams) -> float:
    return rates(state.field, state.orientation, params)[1]


def _phase_derivatives(params, intensity, orientation, cooperativity):
    """(dPhi/dI, dPhi/dp), complex."""
    if params.variant is Variant.SIMPLE:
        lin = 2.0 * cooperativity * params.gamma_cav / params.delta
        kerr = 2.0 * lin / (params.delta * params.delta)
        return complex(-kerr), complex(lin)
    phi1 = _phi1(cooperativity, params.gamma_cav, params.delta, intensity)
    denom = 1.0 + params.delta ** 2 + 2.0 * intensity
    return -2.0 * phi1 / denom * (1.0 + orientation), phi1


def local_jacobian(field: complex, orientation: float, params: ModelParams,
                   phi0: float | None = None,
                   cooperativity: float | None = None) -> np.ndarray:
    """Analytic Jacobian of the real vector field ``(Re a, Im a, p)``."""
    if cooperativity is None:
        cooperativity = params.cooperativity
    x, y = field.real, field.imag
    intensity = x * x + y * y
    phase = cavity_phase(params, intensity, orientation, phi0, cooperativity)
    dphi_di, dphi_dp = _phase_derivatives(params, intensity, orientation, cooperativity)
    scale = params.kappa / params.gamma_cav
    linear = -(params.gamma_cav - 1j * phase)
    # d(da/dt)/dx and d(da/dt)/dy as complex numbers (columns of the real Jacobian)
    col_x = scale * (linear + 1j * field * dphi_di * 2.0 * x)
    col_y = scale * (1j * linear + 1j * field * dphi_di * 2.0 * y)
    col_p = scale * 1j * field * dphi_dp
    drate = _pumping_rate_derivative(params, intensity) * (1.0 - orientation)
    jac = np.empty((3, 3))
    jac[0] = col_x.real, col_y.real, col_p.real
    jac[1] = col_x.imag, col_y.imag, col_p.imag
    jac[2] = (2.0 * x * drate, 2.0 * y * drate,
              -params.gamma_p - pumping_rate(params, intensity))
    return jac
