"""Exception types raised across the package."""


class CSEPError(Exception):
    """Base class for all package errors."""


class DomainError(CSEPError, ValueError):
    """Argument outside the domain of a formula or a malformed domain spec."""


class MaxStepsExceeded(CSEPError):
    """A walk-on-spheres path did not reach the boundary shell in time."""


class TimeBudgetExceeded(CSEPError):
    """An Euler path survived past ``max_time``.

    The censored sample is attached as ``sample`` so callers can still use it.
    """

    def __init__(self, message, sample=None):
        super().__init__(message)
        self.sample = sample


class EmptyMask(CSEPError):
    pass


class ConvergenceFailure(CSEPError):
    pass


class MonotonicityViolation(CSEPError):
    pass


class WindowTooNarrow(CSEPError):
    pass


class VarianceUndefined(CSEPError):
    pass


class CensoredData(CSEPError):
    pass
