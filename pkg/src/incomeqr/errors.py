"""Exception types raised across the package."""


class IncomeQRError(Exception):
    """Base class for all package errors."""


class DomainError(IncomeQRError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NonConvergenceError(IncomeQRError, ArithmeticError):
    """An iterative procedure exhausted its budget before converging."""


class MomentNotExistError(DomainError):
    """The requested (truncated) moment diverges for these parameters."""


class CovarianceUnavailableError(IncomeQRError):
    """The fit carries no usable covariance matrix."""


class DataError(IncomeQRError, ValueError):
    """Input data violates the model's requirements."""
