"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class TimeRescaleError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(TimeRescaleError, ValueError):
    """Invalid physical or numerical parameter (a <= 0, N < 2, t out of range, ...)."""


class NumericalError(TimeRescaleError, RuntimeError):
    """An iterative procedure did not reach its tolerance.

    ``residual`` carries the last achieved error measure so callers can
    decide whether the result is still usable.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class ScheduleError(TimeRescaleError):
    """A Hamiltonian schedule produced a malformed (non-Hermitian, wrong shape) matrix."""


class ContractError(TimeRescaleError):
    """An operation was called on an input that violates its declared contract."""


class UndefinedPhaseError(TimeRescaleError, ValueError):
    """Relative phase requested for (near-)orthogonal states."""


class ConfigError(TimeRescaleError, ValueError):
    """Scenario configuration could not be parsed or is incomplete."""
