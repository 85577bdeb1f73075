"""Quantile-parameterized Singh-Maddala and Dagum distributions and the
parametric quantile regressions built on them."""

__version__ = "0.1.0"

from incomeqr.distributions import ClassicalDA, ClassicalSM, QuantileDA, QuantileSM
from incomeqr.errors import (
    CovarianceUnavailableError,
    DataError,
    DomainError,
    IncomeQRError,
    MomentNotExistError,
    NonConvergenceError,
)
from incomeqr.regression import (
    DesignData,
    Family,
    FitResult,
    Link,
    RegressionSpec,
    coefficient_table,
    fit,
)

__all__ = [
    "__version__",
    "ClassicalSM",
    "ClassicalDA",
    "QuantileSM",
    "QuantileDA",
    "Family",
    "Link",
    "RegressionSpec",
    "DesignData",
    "FitResult",
    "fit",
    "coefficient_table",
    "IncomeQRError",
    "DomainError",
    "DataError",
    "NonConvergenceError",
    "MomentNotExistError",
    "CovarianceUnavailableError",
]
