"""Laboratory parameters and their reduction to the dimensionless model.

The defaults describe the cesium experiment: D2 line at 852.35 nm with
Gamma / 2pi = 5.2 MHz, a 25 cm linear cavity (round trip 2L/c) with a 10 %
input coupler, ~1 % window losses and a 260 um waist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import epsilon_0, hbar

from coldcavity.errors import ConfigError
from coldcavity.model import ModelParams, Variant

__all__ = [
    "CS_D2",
    "PhysicalConfig",
    "atom_number_for",
    "cycling_dipole",
    "power_for_drive",
    "to_dimensionless",
]


@dataclass(frozen=True)
class AtomicLine:
    wavelength: float  # m
    gamma_over_2pi: float  # Hz
    f_ground: int
    f_excited: int

    @property
    def isotropic_factor(self) -> float:
        """Mean squared CG coefficient relative to the stretched line, ``(2F'+1) / (3(2F+1))``."""
        return (2 * self.f_excited + 1) / (3 * (2 * self.f_ground + 1))


CS_D2 = AtomicLine(wavelength=852.35e-9, gamma_over_2pi=5.2e6, f_ground=4, f_excited=5)


def cycling_dipole(wavelength: float, gamma_over_2pi: float) -> float:
    """Dipole of a closed two-level line from its spontaneous decay rate (C m)."""
    omega = 2 * math.pi * SPEED_OF_LIGHT / wavelength
    gamma = 2 * math.pi * gamma_over_2pi
    return math.sqrt(3 * math.pi * epsilon_0 * hbar * SPEED_OF_LIGHT ** 3 * gamma / omega ** 3)


@dataclass(frozen=True)
class PhysicalConfig:
    """Experimental parameters in SI units.

    ``dipole`` and ``saturation_intensity`` are alternative ways of fixing
    the atom-field coupling; when both are ``None`` the dipole follows from
    the linewidth, averaged over the Zeeman transitions of the line.
    ``saturation_intensity`` uses the usual convention (``s = I / I_sat``
    with excited population ``s/2 / (1 + delta**2 + s)``). ``mode_matching``
    is the fraction of input power coupled into the cavity mode.
    """

    atom_number: float = 6.6e7
    atomic_detuning: float = 22 * 5.2e6  # (omega_0 - omega_L) / 2pi, Hz
    input_power: float = 100e-6  # W
    gamma_over_2pi: float = CS_D2.gamma_over_2pi
    wavelength: float = CS_D2.wavelength
    cavity_length: float = 0.25
    input_transmission: float = 0.10
    extra_loss: float = 0.01
    waist: float = 260e-6
    dipole: float | None = None
    saturation_intensity: float | None = None
    mode_matching: float = 1.0

    def __post_init__(self):
        positive = ("gamma_over_2pi", "wavelength", "cavity_length", "input_transmission",
                    "waist", "mode_matching")
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("atom_number", "input_power", "extra_loss"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("dipole", "saturation_intensity"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigError(f"{name} must be > 0, got {value}")
        if self.input_transmission > 1 or self.mode_matching > 1:
            raise ConfigError("input_transmission and mode_matching must not exceed 1")

    @property
    def gamma(self) -> float:
        return 2 * math.pi * self.gamma_over_2pi

    @property
    def omega(self) -> float:
        return 2 * math.pi * SPEED_OF_LIGHT / self.wavelength

    @property
    def round_trip_time(self) -> float:
        return 2 * self.cavity_length / SPEED_OF_LIGHT

    @property
    def mode_area(self) -> float:
        """Effective cross-section ``pi w**2 / 2`` of the Gaussian mode."""
        return math.pi * self.waist ** 2 / 2

    @property
    def gamma_cav(self) -> float:
        return 0.5 * (self.input_transmission + self.extra_loss)

    def effective_dipole(self) -> float:
        from_sat = None
        if self.saturation_intensity is not None:
            from_sat = math.sqrt(epsilon_0 * SPEED_OF_LIGHT * hbar ** 2 * self.gamma ** 2
                                 / (4 * self.saturation_intensity))
        if self.dipole is not None and from_sat is not None:
            if abs(self.dipole / from_sat - 1) > 0.05:
                raise ConfigError(
                    f"dipole {self.dipole:.4g} C m and saturation intensity "
                    f"{self.saturation_intensity:.4g} W/m^2 disagree (implied {from_sat:.4g} C m)")
            return self.dipole
        if self.dipole is not None:
            return self.dipole
        if from_sat is not None:
            return from_sat
        d_cyc = cycling_dipole(self.wavelength, self.gamma_over_2pi)
        return d_cyc * math.sqrt(CS_D2.isotropic_factor)

    def coupling_squared(self) -> float:
        """``g**2 = d**2 omega_L / (2 eps0 hbar S c)`` in s^-2 per photon/s."""
        d = self.effective_dipole()
        return d ** 2 * self.omega / (2 * epsilon_0 * hbar * self.mode_area * SPEED_OF_LIGHT)


def to_dimensionless(config: PhysicalConfig, *, phi0: float = 0.0, beta: float = 0.0,
                     gamma_p: float = 1e-3, variant: Variant = Variant.SIMPLE) -> ModelParams:
    """Reduce a laboratory configuration to :class:`ModelParams`.

    Time is in units of 1/Gamma. Fields are scaled as ``a = 2 g alpha / Gamma``
    with ``|alpha|**2`` in photons per second, so the drive is
    ``2 g sqrt(eta P_in / (hbar omega_L)) / Gamma``.
    """
    g2 = config.coupling_squared()
    gamma = config.gamma
    gamma_cav = config.gamma_cav
    photon_flux = config.mode_matching * config.input_power / (hbar * config.omega)
    return ModelParams(
        delta=2 * config.atomic_detuning / config.gamma_over_2pi,
        phi0=phi0,
        gamma_cav=gamma_cav,
        kappa=gamma_cav / config.round_trip_time / gamma,
        cooperativity=g2 * config.atom_number / (gamma_cav * gamma),
        beta=beta,
        gamma_p=gamma_p,
        drive=2 * math.sqrt(g2 * photon_flux) / gamma,
        variant=variant,
        mirror_transmission=config.input_transmission,
    )


def atom_number_for(config: PhysicalConfig, cooperativity: float) -> float:
    """Atom number giving the requested cooperativity with this geometry."""
    return cooperativity * config.gamma_cav * config.gamma / config.coupling_squared()


def power_for_drive(config: PhysicalConfig, drive: float) -> float:
    """Input power (W) that produces the dimensionless ``drive``."""
    flux = (drive * config.gamma / 2) ** 2 / config.coupling_squared()
    return flux * hbar * config.omega / config.mode_matching
