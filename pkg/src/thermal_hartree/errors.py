"""Exception hierarchy shared by all solver modules."""

from __future__ import annotations


class ThermalHartreeError(Exception):
    """Base class for every error raised by this package."""


class InvalidGrid(ThermalHartreeError, ValueError):
    pass


class GridMismatch(ThermalHartreeError, ValueError):
    pass


class NegativeArgument(ThermalHartreeError, ValueError):
    pass


class UndefinedAtZero(ThermalHartreeError, ValueError):
    pass


class NegativeDensity(ThermalHartreeError, ValueError):
    pass


class ConvergenceFailure(ThermalHartreeError, RuntimeError):
    """Inner eigensolver failed to reach its residual target."""


class EmptySpectrum(ThermalHartreeError, ValueError):
    pass


class MassNotAttainable(ThermalHartreeError, RuntimeError):
    """The bound spectrum cannot carry the requested mass with a negative multiplier.

    Raised near or above the maximal temperature, or when the retained
    spectrum is truncated too aggressively.
    """

    def __init__(self, message: str, mass_at_zero: float | None = None):
        super().__init__(message)
        self.mass_at_zero = mass_at_zero


class InvalidTemperature(ThermalHartreeError, ValueError):
    pass


class NotConverged(ThermalHartreeError, RuntimeError):
    """Fixed-point iteration hit ``max_iterations``; ``result`` holds the last iterate."""

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class InsufficientSpectrum(ThermalHartreeError, ValueError):
    pass


class NoRootFound(ThermalHartreeError, RuntimeError):
    pass


class Stagnation(ThermalHartreeError, RuntimeError):
    pass
