"""Nonlinear dynamics of optically pumped cold atoms in a driven optical cavity."""

from coldcavity.errors import (
    CavityError,
    ConfigError,
    DegenerateDetuningError,
    FitError,
    IntegrationError,
    NoBistabilityError,
    NonFiniteStateError,
    NumericalError,
    RootFindingError,
    StepSizeUnderflowError,
    WindowTooShortError,
)
from coldcavity.model import ModelParams, SystemState, Variant

__all__ = [
    "CavityError",
    "ConfigError",
    "DegenerateDetuningError",
    "FitError",
    "IntegrationError",
    "ModelParams",
    "NoBistabilityError",
    "NonFiniteStateError",
    "NumericalError",
    "RootFindingError",
    "StepSizeUnderflowError",
    "SystemState",
    "Variant",
    "WindowTooShortError",
]

__version__ = "0.1.0"
