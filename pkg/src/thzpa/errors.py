"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, data problems with 3, and numerical failures with 4.
"""


class ThzpaError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(ThzpaError):
    """Invalid configuration: bad option combinations, unknown keys, missing files."""

    exit_code = 2


class DataError(ThzpaError):
    """Malformed or inconsistent input data (measurement files, model files)."""

    exit_code = 3


class NumericalError(ThzpaError):
    """Numerical failure: rank deficiency, degenerate systems, non-convergence."""

    exit_code = 4


class DomainError(DataError):
    """A numeric argument is outside the domain of the requested operation."""


class InputRangeError(DomainError):
    """Input outside a model's validity range. Carries the violated bound."""

    def __init__(self, message, value=None, lo=None, hi=None):
        super().__init__(message)
        self.value = value
        self.lo = lo
        self.hi = hi
