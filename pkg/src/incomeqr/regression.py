"""Parametric quantile regression on the quantile-based families.

The ``tau``-th conditional quantile of each response is linked to the
covariates, ``g(gamma_i) = x_i' beta``, and all parameters
``theta = (beta, a, shape2)`` are estimated by maximum likelihood. The
optimizer works on ``(beta, log a, log shape2)``; inference is reported in
the original coordinates from the observed information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from incomeqr import _kernels
from incomeqr.distributions import QuantileDA, QuantileSM, da_e_p, sm_c_q
from incomeqr.errors import CovarianceUnavailableError, DataError, DomainError
from incomeqr.optimize import bfgs
from incomeqr.specfun import std_normal_cdf, std_normal_quantile

__all__ = [
    "Family",
    "Link",
    "RegressionSpec",
    "DesignData",
    "ParamVector",
    "FitOptions",
    "FitResult",
    "link_apply",
    "link_invert",
    "design_matrix",
    "neg_log_likelihood",
    "analytic_gradient",
    "numerical_hessian",
    "fit",
    "wald_interval",
    "predict_gamma",
    "coefficient_table",
    "information_criteria",
]


class Family(str, Enum):
    QSM = "QSM"
    QDA = "QDA"

    @property
    def shape2_name(self) -> str:
        return "q" if self is Family.QSM else "p"

    @classmethod
    def parse(cls, value) -> Family:
        if isinstance(value, Family):
            return value
        key = str(value).strip().lower()
        aliases = {"qsm": cls.QSM, "sm": cls.QSM, "singh-maddala": cls.QSM,
                   "qda": cls.QDA, "da": cls.QDA, "dagum": cls.QDA}
        if key not in aliases:
            raise DomainError(f"unknown family {value!r}")
        return aliases[key]


class Link(str, Enum):
    LOG = "log"
    IDENTITY = "identity"

    @classmethod
    def parse(cls, value) -> Link:
        if isinstance(value, Link):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DomainError(f"unknown link {value!r}; use 'log' or 'identity'") from None


def link_apply(link, gamma):
    """``g(gamma)``: the linear-predictor value of a positive quantile."""
    link = Link.parse(link)
    gamma = np.asarray(gamma, dtype=float)
    if np.any(~(gamma > 0)):
        raise DomainError("link functions are defined for gamma > 0")
    out = np.log(gamma) if link is Link.LOG else gamma.copy()
    return out if out.ndim else float(out)


def link_invert(link, eta):
    """``g^{-1}(eta)``. The identity link rejects non-positive ``eta``."""
    link = Link.parse(link)
    eta = np.asarray(eta, dtype=float)
    if link is Link.LOG:
        out = np.exp(eta)
    else:
        bad = ~(eta > 0)
        if np.any(bad):
            rows = np.flatnonzero(np.atleast_1d(bad))[:10].tolist()
            raise DomainError(f"identity link gives gamma <= 0 at rows {rows}")
        out = eta.copy()
    return out if out.ndim else float(out)


def _dgamma_deta(link: Link, gamma):
    return gamma if link is Link.LOG else np.ones_like(gamma)


@dataclass(frozen=True)
class RegressionSpec:
    family: Family
    tau: float
    link: Link = Link.LOG
    intercept: bool = True
    covariate_names: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        object.__setattr__(self, "link", Link.parse(self.link))
        object.__setattr__(self, "covariate_names", tuple(self.covariate_names))
        if not (0.0 < float(self.tau) < 1.0):
            raise DomainError(f"tau must lie in (0, 1), got {self.tau!r}")

    @property
    def term_names(self) -> tuple[str, ...]:
        return (("(Intercept)",) if self.intercept else ()) + self.covariate_names


def design_matrix(covariates, intercept: bool = True) -> np.ndarray:
    cov = np.asarray(covariates, dtype=float)
    if cov.ndim == 1:
        cov = cov[:, None]
    if intercept:
        cov = np.column_stack([np.ones(cov.shape[0]), cov])
    return cov


@dataclass(frozen=True, eq=False)
class DesignData:
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.ndim != 2:
            raise DataError("X must be a 2-d matrix")
        if X.shape[0] != y.shape[0]:
            raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
        if not np.all(np.isfinite(X)):
            raise DataError("X contains non-finite entries")
        bad = np.flatnonzero(~(np.isfinite(y) & (y > 0)))
        if bad.size:
            raise DataError(f"responses must be finite and > 0; offending rows {bad[:10].tolist()}")
        if np.linalg.matrix_rank(X) < X.shape[1]:
            raise DataError("design matrix is rank deficient")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def n_coef(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True, eq=False)
class ParamVector:
    beta: np.ndarray
    shape1: float
    shape2: float

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float).ravel())
        object.__setattr__(self, "shape1", float(self.shape1))
        object.__setattr__(self, "shape2", float(self.shape2))

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.beta, [self.shape1, self.shape2]])

    @classmethod
    def from_array(cls, theta) -> ParamVector:
        theta = np.asarray(theta, dtype=float)
        return cls(theta[:-2], theta[-2], theta[-1])

    def to_opt(self) -> np.ndarray:
        return np.concatenate([self.beta, [math.log(self.shape1), math.log(self.shape2)]])

    @classmethod
    def from_opt(cls, z) -> ParamVector:
        z = np.asarray(z, dtype=float)
        return cls(z[:-2], math.exp(z[-2]), math.exp(z[-1]))


def _family_constants(family: Family, tau: float, shape2: float):
    """log of c_q / e_p and its derivative w.r.t. the second shape."""
    if family is Family.QSM:
        c = float(sm_c_q(tau, shape2))
        dc = (c + 1.0) * math.log1p(-tau) / shape2**2
        return math.log(c), dc / c
    e = float(da_e_p(tau, shape2))
    de = (e + 1.0) * math.log(tau) / shape2**2
    return math.log(e), de / e


# shape values outside this range are treated as infeasible
_SHAPE_MIN, _SHAPE_MAX = 1e-8, 1e8
_LOG_SHAPE_MAX = math.log(_SHAPE_MAX)


def _kernel(family: Family):
    return _kernels.qsm_nll_grad if family is Family.QSM else _kernels.qda_nll_grad


def _evaluate(spec: RegressionSpec, data: DesignData, beta, a, s):
    """(nll, grad in original coordinates); grad is None when infeasible."""
    if beta.shape[0] != data.n_coef:
        raise DataError(f"beta has {beta.shape[0]} entries, X has {data.n_coef} columns")
    if not (_SHAPE_MIN < a < _SHAPE_MAX and _SHAPE_MIN < s < _SHAPE_MAX):
        return math.inf, None
    eta = data.X @ beta
    try:
        with np.errstate(over="ignore"):
            gamma = link_invert(spec.link, eta)
    except DomainError:
        return math.inf, None
    gamma = np.atleast_1d(gamma)
    if not np.all(np.isfinite(gamma) & (gamma > 0)):
        return math.inf, None
    try:
        with np.errstate(all="ignore"):
            lc, dlc = _family_constants(spec.family, spec.tau, s)
    except (ValueError, ZeroDivisionError, OverflowError):
        return math.inf, None
    if not (math.isfinite(lc) and math.isfinite(dlc)):
        return math.inf, None
    with np.errstate(all="ignore"):
        nll, dg, da, ds = _kernel(spec.family)(data.y, gamma, a, s, lc, dlc)
    if not math.isfinite(nll):
        return math.inf, None
    dbeta = data.X.T @ (dg * _dgamma_deta(spec.link, gamma))
    return float(nll), np.concatenate([dbeta, [da, ds]])


def _as_params(theta) -> ParamVector:
    return theta if isinstance(theta, ParamVector) else ParamVector.from_array(theta)


def neg_log_likelihood(spec: RegressionSpec, data: DesignData, theta) -> float:
    """Negative log-likelihood; ``inf`` at infeasible parameters."""
    th = _as_params(theta)
    return _evaluate(spec, data, th.beta, th.shape1, th.shape2)[0]


def analytic_gradient(spec: RegressionSpec, data: DesignData, theta) -> np.ndarray:
    """Score of the negative log-likelihood in ``(beta, a, shape2)``."""
    th = _as_params(theta)
    nll, grad = _evaluate(spec, data, th.beta, th.shape1, th.shape2)
    if grad is None:
        raise DomainError("parameters are infeasible for this data")
    return grad


def numerical_hessian(spec: RegressionSpec, data: DesignData, theta,
                      rel_step: float = 1e-5) -> np.ndarray:
    """Central differences of the analytic score, symmetrized.

    Step for coordinate ``j`` is ``max(rel_step, rel_step * |theta_j|)``.
    """
    th = _as_params(theta).to_array()
    k = th.size
    H = np.empty((k, k))
    for j in range(k):
        h = max(rel_step, rel_step * abs(th[j]))
        up, dn = th.copy(), th.copy()
        up[j] += h
        dn[j] -= h
        H[:, j] = (analytic_gradient(spec, data, up) - analytic_gradient(spec, data, dn)) / (2.0 * h)
    return 0.5 * (H + H.T)


def information_criteria(loglik: float, n_params: int, nobs: int) -> tuple[float, float]:
    """(AIC, BIC) = (2k - 2 loglik, k ln n - 2 loglik)."""
    return 2.0 * n_params - 2.0 * loglik, n_params * math.log(nobs) - 2.0 * loglik


@dataclass(frozen=True)
class FitOptions:
    gtol: float = 1e-6
    ftol: float = 1e-10
    max_iter: int = 1000
    hessian_step: float = 1e-5


@dataclass(frozen=True, eq=False)
class FitResult:
    spec: RegressionSpec
    estimates: ParamVector
    covariance: np.ndarray | None
    std_errors: np.ndarray | None
    loglik: float
    aic: float
    bic: float
    converged: bool
    iterations: int
    grad_norm: float
    nobs: int
    message: str = ""
    covariance_message: str = field(default="")

    @property
    def family(self) -> Family:
        return self.spec.family

    @property
    def link(self) -> Link:
        return self.spec.link

    @property
    def tau(self) -> float:
        return self.spec.tau

    @property
    def n_params(self) -> int:
        return self.estimates.beta.size + 2

    @property
    def param_names(self) -> list[str]:
        names = [f"beta{j}" for j in range(self.estimates.beta.size)]
        return names + ["a", self.family.shape2_name]

    @property
    def theta(self) -> np.ndarray:
        return self.estimates.to_array()

    def distribution(self, gamma):
        """The fitted conditional law at quantile(s) ``gamma``."""
        return conditional_distribution(self.spec, self.estimates.shape1,
                                        gamma, self.estimates.shape2)


def conditional_distribution(spec: RegressionSpec, a: float, gamma, shape2: float):
    if spec.family is Family.QSM:
        return QuantileSM(a, gamma, shape2, spec.tau)
    return QuantileDA(a, gamma, shape2, spec.tau)


def default_init(spec: RegressionSpec, data: DesignData) -> ParamVector:
    beta = np.zeros(data.n_coef)
    beta[0] = link_apply(spec.link, float(np.quantile(data.y, spec.tau)))
    return ParamVector(beta, 2.0, 1.0)


def fit(spec: RegressionSpec, data: DesignData, init: ParamVector | None = None,
        options: FitOptions = FitOptions()) -> FitResult:
    """Maximum-likelihood fit by BFGS on ``(beta, log a, log shape2)``.

    Never raises for optimizer trouble: non-convergence is reported through
    ``converged=False`` and a singular or indefinite Hessian leaves
    ``covariance=None`` with the reason in ``covariance_message``.
    """
    kb = data.n_coef
    if not kb < data.n:
        raise DataError(f"need more observations than coefficients (n={data.n}, coefficients={kb})")
    start = init if init is not None else default_init(spec, data)
    if start.beta.shape[0] != kb:
        raise DataError(f"init has {start.beta.shape[0]} coefficients, X has {kb} columns")

    def fun_grad(z):
        if not (abs(z[kb]) < _LOG_SHAPE_MAX and abs(z[kb + 1]) < _LOG_SHAPE_MAX):
            return math.inf, None
        a, s = math.exp(z[kb]), math.exp(z[kb + 1])
        f, g = _evaluate(spec, data, z[:kb], a, s)
        if g is None:
            return math.inf, None
        g = g.copy()
        g[kb] *= a
        g[kb + 1] *= s
        return f, g

    res = bfgs(fun_grad, start.to_opt(), gtol=options.gtol, ftol=options.ftol,
               max_iter=options.max_iter)
    est = ParamVector.from_opt(res.x)
    nll = res.fun
    grad = analytic_gradient(spec, data, est) if math.isfinite(nll) else None
    grad_norm = float(np.max(np.abs(grad))) if grad is not None else math.inf
    loglik = -nll
    aic, bic = information_criteria(loglik, kb + 2, data.n)

    covariance = std_errors = None
    cov_msg = ""
    if grad is None:
        cov_msg = "objective not finite at the estimate"
    else:
        try:
            H = numerical_hessian(spec, data, est, options.hessian_step)
            if not np.all(np.isfinite(H)):
                raise np.linalg.LinAlgError("non-finite Hessian")
            cov = np.linalg.inv(H)
            cov = 0.5 * (cov + cov.T)
            diag = np.diag(cov)
            if np.any(diag < 0) or not np.all(np.isfinite(cov)):
                cov_msg = "observed information is not positive definite"
            else:
                covariance, std_errors = cov, np.sqrt(diag)
        except (np.linalg.LinAlgError, DomainError) as exc:
            cov_msg = f"singular observed information: {exc}"

    return FitResult(
        spec=spec,
        estimates=est,
        covariance=covariance,
        std_errors=std_errors,
        loglik=loglik,
        aic=aic,
        bic=bic,
        converged=bool(res.converged),
        iterations=res.iterations,
        grad_norm=grad_norm,
        nobs=data.n,
        message=res.message,
        covariance_message=cov_msg,
    )


def _param_index(fit_result: FitResult, index) -> int:
    if isinstance(index, str):
        try:
            return fit_result.param_names.index(index)
        except ValueError:
            raise KeyError(f"no parameter named {index!r}") from None
    return int(index)


def wald_interval(fit_result: FitResult, index, level: float = 0.95) -> tuple[float, float]:
    """Normal-theory interval ``theta_j -/+ z_{(1+level)/2} * SE_j``."""
    if fit_result.std_errors is None:
        raise CovarianceUnavailableError(
            fit_result.covariance_message or "fit has no covariance matrix"
        )
    if not (0.0 < level < 1.0):
        raise DomainError("level must lie in (0, 1)")
    j = _param_index(fit_result, index)
    z = std_normal_quantile(0.5 * (1.0 + level))
    est = fit_result.theta[j]
    half = z * fit_result.std_errors[j]
    return float(est - half), float(est + half)


def wald_intervals(fit_result: FitResult, level: float = 0.95) -> tuple[np.ndarray, np.ndarray]:
    if fit_result.std_errors is None:
        raise CovarianceUnavailableError(
            fit_result.covariance_message or "fit has no covariance matrix"
        )
    z = std_normal_quantile(0.5 * (1.0 + level))
    return fit_result.theta - z * fit_result.std_errors, fit_result.theta + z * fit_result.std_errors


def predict_gamma(fit_result: FitResult, X_new) -> np.ndarray:
    """Estimated conditional ``tau``-quantiles ``g^{-1}(X_new beta)``."""
    X_new = np.atleast_2d(np.asarray(X_new, dtype=float))
    beta = fit_result.estimates.beta
    if X_new.shape[1] != beta.shape[0]:
        raise DataError(f"X_new has {X_new.shape[1]} columns, model has {beta.shape[0]} coefficients")
    return np.atleast_1d(link_invert(fit_result.link, X_new @ beta))


def coefficient_table(fit_result: FitResult) -> list[dict]:
    """Rows of estimate, SE, z-ratio and two-sided normal p-value."""
    names = fit_result.param_names
    terms = list(fit_result.spec.term_names)
    theta = fit_result.theta
    rows = []
    for j, name in enumerate(names):
        se = None if fit_result.std_errors is None else float(fit_result.std_errors[j])
        z = p = None
        if se is not None and se > 0:
            z = float(theta[j] / se)
            p = float(2.0 * std_normal_cdf(-abs(z)))
        term = terms[j] if j < len(terms) else name
        rows.append({"parameter": name, "term": term, "estimate": float(theta[j]),
                     "std_error": se, "z": z, "p_value": p})
    return rows
