"""Exception types raised across the package."""


class BoundaryVolError(Exception):
    """Base class for all package errors."""


class ConfigError(BoundaryVolError, ValueError):
    """Invalid or inconsistent configuration."""


class DataError(BoundaryVolError, ValueError):
    """Input data violates a required invariant."""


class DomainError(BoundaryVolError, ValueError):
    """Argument outside the supported domain of a function."""


class NumericError(BoundaryVolError, ArithmeticError):
    """A numerical routine produced a non-finite or unbracketed result."""


class CalibrationError(BoundaryVolError):
    """A calibrated table violates monotonicity or positivity."""
