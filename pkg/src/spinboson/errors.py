"""Exception types raised by the simulation engine."""


class SpinBosonError(Exception):
    """Base class for all package errors."""


class InvalidDimensionError(SpinBosonError, ValueError):
    pass


class TruncationError(SpinBosonError):
    """Fock truncation too small for the requested operator or state."""


class NotPSDError(SpinBosonError, ValueError):
    pass


class InvalidStateError(SpinBosonError, ValueError):
    """Matrix violates the trace, hermiticity or positivity contract of a state."""


class UnstablePotentialError(SpinBosonError, ValueError):
    pass


class ConfigError(SpinBosonError, ValueError):
    pass


class NumericalQualityError(SpinBosonError):
    """Trajectory exceeded a trace/positivity/leakage threshold.

    The partially evolved trajectory is attached as ``trajectory`` when
    available so callers can inspect where things went wrong.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory
