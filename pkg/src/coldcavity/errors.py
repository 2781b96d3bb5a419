"""Exception hierarchy.

Usage problems derive from :class:`ValueError`; failures of a numerical
procedure derive from :class:`NumericalError` so the CLI can map them to a
distinct exit status.
"""


class CavityError(Exception):
    """Base class for all package errors."""


class ConfigError(CavityError, ValueError):
    """Invalid or inconsistent parameters/configuration."""


class DegenerateDetuningError(ConfigError):
    """A formula that divides by the detuning was called with delta == 0."""


class NoBistabilityError(ConfigError):
    """The Kerr coefficient has the wrong sign for a bistability threshold."""


class NumericalError(CavityError, RuntimeError):
    """A numerical procedure failed to produce a trustworthy result."""


class IntegrationError(NumericalError):
    pass


class StepSizeUnderflowError(IntegrationError):
    def __init__(self, t, h):
        super().__init__(f"step size underflow at t={t:.17g} (h={h:.3g})")
        self.t = t
        self.h = h


class NonFiniteStateError(IntegrationError):
    def __init__(self, t):
        super().__init__(f"non-finite state encountered at t={t:.17g}")
        self.t = t


class RootFindingError(NumericalError):
    pass


class FitError(NumericalError):
    pass


class WindowTooShortError(NumericalError):
    pass
