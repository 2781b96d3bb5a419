"""Named scenarios for the cavity-scan, drift and pumping experiments.

Every preset starts from the cesium apparatus in :class:`PhysicalConfig`
(detuning 22 Gamma, i.e. delta = 44) with the atom number chosen so that
C = 400 and the cavity rate fixed at kappa = 5 MHz / 5.2 MHz. The
``provenance`` of each scenario tags every value as

``measured``  quoted from the experiment,
``derived``   computed from measured values by this package,
``chosen``    a modelling default with no measured counterpart.

Input powers assume perfect mode matching. One threshold power (the input
power at which the pump-free cavity turns bistable) is about 14 uW.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from coldcavity.dynamics import ScanProtocol
from coldcavity.errors import ConfigError
from coldcavity.model import ModelParams, SystemState
from coldcavity.physical import PhysicalConfig, atom_number_for, to_dimensionless
from coldcavity.steady import bistability_threshold, find_fixed_points
from coldcavity.zeeman import beta_for

__all__ = ["PRESET_NAMES", "Scenario", "drive_for_ratio", "preset_scenario", "scenario"]

KAPPA = 5.0 / 5.2
COOPERATIVITY = 400.0
GAMMA_P = 1e-3
BETA_INTENSITY = 10.0


@dataclass(frozen=True)
class Scenario:
    name: str
    params: ModelParams
    protocol: ScanProtocol
    provenance: dict = field(default_factory=dict)
    description: str = ""
    input_power: float | None = None  # W
    initial: SystemState | None = None  # None: dark cavity, unpumped


def base_config(**overrides) -> PhysicalConfig:
    cfg = PhysicalConfig(**overrides)
    return PhysicalConfig(**{**cfg.__dict__, "atom_number": atom_number_for(cfg, COOPERATIVITY)})


def base_params(input_power: float = 100e-6, beta: float | None = None) -> ModelParams:
    """Lab configuration at ``input_power`` with measured kappa and C."""
    params = to_dimensionless(base_config(input_power=input_power), gamma_p=GAMMA_P)
    if beta is None:
        beta = beta_for(params.delta, BETA_INTENSITY)
    return params.replace(kappa=KAPPA, cooperativity=COOPERATIVITY, beta=beta)


def drive_for_ratio(params: ModelParams, ratio: float) -> float:
    """Drive whose input-referred intensity is ``ratio`` times the bistability threshold."""
    target = ratio * bistability_threshold(params)
    return math.sqrt(target * params.gamma_cav) / params.coupling_amplitude


_COMMON = {
    "delta": "measured (22 Gamma detuning)",
    "gamma_cav": "derived (10 % coupler plus 1 % window loss)",
    "kappa": "measured (5 MHz cavity rate)",
    "cooperativity": "measured (400)",
    "beta": "derived (multilevel pumping fit at I = 10)",
    "gamma_p": "chosen (1e-3 Gamma)",
}


def _fig2():
    params = base_params(100e-6, beta=0.0)
    return Scenario(
        "fig2", params,
        ScanProtocol.ramp(-0.28, -0.90, 1e-4, round_trip=True),
        {**_COMMON, "beta": "chosen (0: trapping beams scramble the orientation)",
         "input_power": "measured (100 uW)", "scan": "chosen (1e-4 rad per 1/Gamma, there and back)"},
        "Hysteresis cycle under a slow back-and-forth cavity scan.", 100e-6)


FIG3_POWERS = {"fig3_p1": 15e-6, "fig3_p2": 30e-6, "fig3_p3": 60e-6, "fig3_p4": 300e-6}


def _fig3(name):
    power = FIG3_POWERS[name]
    return Scenario(
        name, base_params(power),
        ScanProtocol.ramp(-0.5, -1.7, 5e-5),
        {**_COMMON, "input_power": f"chosen ({power * 1e6:g} uW, within the 15-300 uW recordings)",
         "scan": "chosen (5e-5 rad per 1/Gamma, decreasing phase)"},
        "Cavity scan with optical pumping; pulsing at intermediate power only.", power)


def _fig4():
    params = base_params(80e-6)
    return Scenario(
        "fig4", params,
        ScanProtocol.atom_decay(1e-5, 20000.0, phi0=-1.2),
        {**_COMMON, "input_power": "measured (80 uW)",
         "phi0": "chosen (-1.2 rad)", "atom_decay_rate": "chosen (1e-5 Gamma)"},
        "Fixed cavity length; the escaping atoms slowly scan the optical length.", 80e-6)


FIG6_RATIOS = {"fig6_p1": 0.5, "fig6_p2": 1.5, "fig6_p3": 3.0, "fig6_p4": 20.0}


def _fig6(name):
    params = base_params()
    ratio = FIG6_RATIOS[name]
    params = params.replace(drive=drive_for_ratio(params, ratio))
    return Scenario(
        name, params,
        ScanProtocol.ramp(-0.5, -1.7, 5e-5),
        {**_COMMON, "drive": f"chosen ({ratio:g} x threshold input intensity)",
         "scan": "chosen (5e-5 rad per 1/Gamma, decreasing phase)"},
        "Computed cavity scan below and above the bistability threshold.")


def _fig7():
    params = base_params()
    params = params.replace(drive=drive_for_ratio(params, 1.5), phi0=-1.26)
    # a dark start lands on a coexisting large-swing cycle; start beside the
    # unstable steady state instead
    (point,) = find_fixed_points(params)
    return Scenario(
        "fig7", params, ScanProtocol.static(12000.0),
        {**_COMMON, "drive": "chosen (1.5 x threshold input intensity)",
         "phi0": "chosen (-1.26 rad, inside the pulsing window)",
         "initial": "chosen (steady state with the field scaled by 1.02)"},
        "Fixed-length self-pulsing with a small orientation swing.",
        initial=SystemState(point.field * 1.02, point.orientation))


def _kerr_pure():
    params = base_params(beta=0.0)
    params = params.replace(drive=drive_for_ratio(params, 2.0))
    return Scenario(
        "kerr_pure", params,
        ScanProtocol.ramp(-0.7, -1.0, 1e-4, round_trip=True),
        {**_COMMON, "beta": "chosen (0: pure Kerr medium)",
         "drive": "chosen (2 x threshold input intensity)"},
        "Pure Kerr cavity, reference for the bistability threshold.")


def _stepwise():
    params = base_params().replace(cooperativity=4000.0, gamma_p=0.0)
    params = params.replace(drive=drive_for_ratio(params, 12.0))
    return Scenario(
        "stepwise", params,
        ScanProtocol.ramp(-8.0, -17.0, 2e-3),
        {**_COMMON, "cooperativity": "chosen (4000: large atom number)",
         "gamma_p": "chosen (0: no relaxation)", "drive": "chosen (12 x threshold input intensity)",
         "scan": "chosen (2e-3 rad per 1/Gamma, decreasing phase)"},
        "Orientation builds up in steps at each resonance crossing.")


_BUILDERS = {
    "fig2": _fig2,
    **{name: (lambda n=name: _fig3(n)) for name in FIG3_POWERS},
    "fig4": _fig4,
    **{name: (lambda n=name: _fig6(n)) for name in FIG6_RATIOS},
    "fig7": _fig7,
    "kerr_pure": _kerr_pure,
    "stepwise": _stepwise,
}
PRESET_NAMES = tuple(_BUILDERS)


def scenario(name: str) -> Scenario:
    """Full scenario, with provenance, for a preset name."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}") from None
    return builder()


def preset_scenario(name: str) -> tuple[ModelParams, ScanProtocol]:
    sc = scenario(name)
    return sc.params, sc.protocol
