"""Exception types shared across the package."""


class GMAccuracyError(Exception):
    """Base class for all package errors."""


class DomainError(GMAccuracyError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConvergenceError(GMAccuracyError, ArithmeticError):
    """An iterative method failed to converge."""


class DegenerateError(GMAccuracyError, ValueError):
    """The sample has zero spread, so no test statistic is defined."""
