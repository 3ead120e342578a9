"""Exception hierarchy.

Two families matter to callers: :class:`ConfigError` (bad input, CLI exit
code 2) and :class:`NumericalGuardError` (a validity guard of an
approximation tripped, CLI exit code 3).
"""


class EITError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(EITError, ValueError):
    pass


class NumericalGuardError(EITError, ArithmeticError):
    pass


class ConfigInvalid(ConfigError):
    pass


class UnknownAxis(ConfigError):
    pass


class StartOutsideCell(ConfigError):
    pass


class NonUnitDirection(ConfigError):
    pass


class StepSizeInvalid(ConfigError):
    pass


class IoFailure(EITError, OSError):
    pass


class DegenerateDenominator(NumericalGuardError):
    """Two-photon resonance with zero control field makes chi 0/0."""


class ZeroRabi(NumericalGuardError):
    pass


class ChiTooLarge(NumericalGuardError):
    pass


class GuardViolated(NumericalGuardError):
    pass


class OutOfCell(NumericalGuardError):
    pass


class NoZExit(NumericalGuardError):
    pass


class GradientNotAxial(NumericalGuardError):
    pass


class ZeroGradient(NumericalGuardError):
    pass


class NotConverged(NumericalGuardError):
    def __init__(self, message, grad_norm=float("nan")):
        super().__init__(message)
        self.grad_norm = grad_norm


class GuardWarning(UserWarning):
    """Emitted when a validity condition is only marginally met."""
