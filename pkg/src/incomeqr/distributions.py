"""Singh-Maddala and Dagum distributions, classical and quantile-based.

The quantile-based forms replace the scale ``b`` by the ``tau``-th quantile
``gamma``::

    Singh-Maddala:  b = gamma * c_q**(-1/a),  c_q = (1 - tau)**(-1/q) - 1
    Dagum:          b = gamma * e_p**(1/a),   e_p = tau**(-1/p) - 1

so that ``cdf(gamma) == tau``. Densities are evaluated in log space and
``gamma`` may be an array (one quantile per observation), which is how the
regression and diagnostics modules use these classes.

Both families reduce to an integral over ``z = (y/b)**a`` of the kernel
``z**(alpha-1) * (1+z)**(-nu)``; moments and truncated moments are built on
that reduction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from incomeqr.errors import DomainError, MomentNotExistError
from incomeqr.specfun import (
    DEFAULT_CONFIG,
    SpecFunConfig,
    UniformStream,
    gauss_2f1,
    log_beta,
)

__all__ = [
    "ClassicalSM",
    "ClassicalDA",
    "QuantileSM",
    "QuantileDA",
    "sm_c_q",
    "da_e_p",
    "sm_pdf",
    "sm_logpdf",
    "sm_cdf",
    "sm_quantile",
    "da_pdf",
    "da_logpdf",
    "da_cdf",
    "da_quantile",
    "qsm_pdf",
    "qsm_logpdf",
    "qsm_cdf",
    "qsm_quantile",
    "qsm_sample",
    "qsm_mode",
    "qsm_moment",
    "qsm_truncated_moment",
    "qda_pdf",
    "qda_logpdf",
    "qda_cdf",
    "qda_quantile",
    "qda_sample",
    "qda_mode",
    "qda_moment",
    "qda_truncated_moment",
]

# switch point between the upper-tail 2F1 form and its complement
_UPPER_FORM_MAX_ARG = 20.0


def _softplus(x):
    return np.logaddexp(0.0, x)


def _positive(name, value):
    arr = np.asarray(value, dtype=float)
    if arr.size == 0 or not np.all(np.isfinite(arr)) or not np.all(arr > 0):
        raise DomainError(f"{name} must be finite and > 0, got {value!r}")


def _probability(name, value):
    if not (0.0 < float(value) < 1.0):
        raise DomainError(f"{name} must lie in (0, 1), got {value!r}")


def _scalar_or_array(x):
    return x if np.ndim(x) else float(x)


def _pos_support(y):
    y = np.asarray(y, dtype=float)
    if np.any(~(y > 0)):
        raise DomainError("density is defined for y > 0 only")
    return y


def _probs(u):
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0) & (u < 1))):
        raise DomainError("quantile level must lie in (0, 1)")
    return u


def sm_c_q(tau: float, q):
    """``(1 - tau)**(-1/q) - 1``, computed without cancellation."""
    return np.expm1(-np.log1p(-tau) / q)


def da_e_p(tau: float, p):
    """``tau**(-1/p) - 1``, computed without cancellation."""
    return np.expm1(-np.log(tau) / p)


def _seed_stream(seed):
    return seed if isinstance(seed, UniformStream) else UniformStream(seed)


def _upper_kernel_integral(alpha, nu, u, config):
    """Integral of ``z**(alpha-1) * (1+z)**(-nu)`` over ``(u, inf)``.

    Requires ``nu > alpha``. For ``1/u`` up to a moderate size the
    closed form ``u**(alpha-nu)/(nu-alpha) * 2F1(nu, nu-alpha; nu-alpha+1;
    -1/u)`` is used directly; for smaller ``u`` the complement
    ``B(alpha, nu-alpha) - u**alpha/alpha * 2F1(nu, alpha; alpha+1; -u)``
    keeps the series argument small (only valid for ``alpha > 0``).
    """
    if 1.0 / u <= _UPPER_FORM_MAX_ARG or alpha <= 0:
        d = nu - alpha
        lead = math.exp((alpha - nu) * math.log(u)) / d
        return lead * gauss_2f1(nu, d, d + 1.0, -1.0 / u, config)
    full = math.exp(log_beta(alpha, nu - alpha))
    lower = math.exp(alpha * math.log(u)) / alpha * gauss_2f1(nu, alpha, alpha + 1.0, -u, config)
    return full - lower


# --------------------------------------------------------------------------
# classical parameterizations


@dataclass(frozen=True, eq=False)
class ClassicalSM:
    """Singh-Maddala ``SM(a, b, q)``: shapes ``a, q`` and scale ``b``."""

    a: float
    b: float
    q: float

    def __post_init__(self):
        _positive("a", self.a)
        _positive("b", self.b)
        _positive("q", self.q)

    def logpdf(self, y):
        y = _pos_support(y)
        lr = np.log(y / self.b)
        out = (
            math.log(self.a) + math.log(self.q) - np.log(self.b)
            + (self.a - 1.0) * lr
            - (1.0 + self.q) * _softplus(self.a * lr)
        )
        return _scalar_or_array(out)

    def pdf(self, y):
        return _scalar_or_array(np.exp(self.logpdf(y)))

    def _log1p_w(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            lr = np.log(np.where(y > 0, y, 0.0) / self.b)
        return _softplus(self.a * lr)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        out = np.where(y > 0, -np.expm1(-self.q * self._log1p_w(y)), 0.0)
        return _scalar_or_array(out)

    def sf(self, y):
        y = np.asarray(y, dtype=float)
        out = np.where(y > 0, np.exp(-self.q * self._log1p_w(y)), 1.0)
        return _scalar_or_array(out)

    def ppf(self, u):
        u = _probs(u)
        c = sm_c_q(u, self.q)
        return _scalar_or_array(self.b * c ** (1.0 / self.a))


@dataclass(frozen=True, eq=False)
class ClassicalDA:
    """Dagum ``DA(a, b, p)``: shapes ``a, p`` and scale ``b``."""

    a: float
    b: float
    p: float

    def __post_init__(self):
        _positive("a", self.a)
        _positive("b", self.b)
        _positive("p", self.p)

    def logpdf(self, y):
        y = _pos_support(y)
        lr = np.log(y / self.b)
        out = (
            math.log(self.a) + math.log(self.p) - np.log(self.b)
            + (self.a * self.p - 1.0) * lr
            - (1.0 + self.p) * _softplus(self.a * lr)
        )
        return _scalar_or_array(out)

    def pdf(self, y):
        return _scalar_or_array(np.exp(self.logpdf(y)))

    def _log1p_winv(self, y):
        # log(1 + (y/b)**(-a)) for y > 0
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            lr = np.log(np.where(y > 0, y, 0.0) / self.b)
        return _softplus(-self.a * lr)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        out = np.where(y > 0, np.exp(-self.p * self._log1p_winv(y)), 0.0)
        return _scalar_or_array(out)

    def sf(self, y):
        y = np.asarray(y, dtype=float)
        out = np.where(y > 0, -np.expm1(-self.p * self._log1p_winv(y)), 1.0)
        return _scalar_or_array(out)

    def ppf(self, u):
        u = _probs(u)
        e = da_e_p(u, self.p)
        return _scalar_or_array(self.b * e ** (-1.0 / self.a))


# --------------------------------------------------------------------------
# quantile-based parameterizations


@dataclass(frozen=True, eq=False)
class QuantileSM:
    """Quantile-based Singh-Maddala; ``gamma`` is the ``tau``-th quantile.

    ``gamma`` may be an array, in which case every method broadcasts it
    against its argument.
    """

    a: float
    gamma: float | np.ndarray
    q: float
    tau: float

    def __post_init__(self):
        _positive("a", self.a)
        _positive("gamma", self.gamma)
        _positive("q", self.q)
        _probability("tau", self.tau)

    @property
    def c_q(self) -> float:
        return float(sm_c_q(self.tau, self.q))

    @property
    def scale(self):
        return self.gamma * self.c_q ** (-1.0 / self.a)

    def to_classical(self) -> ClassicalSM:
        return ClassicalSM(self.a, self.scale, self.q)

    def _log_w(self, y):
        # log(c_q * (y/gamma)**a); -inf at y = 0
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            return math.log(self.c_q) + self.a * np.log(np.where(y > 0, y, 0.0) / self.gamma)

    def logpdf(self, y):
        y = _pos_support(y)
        lr = np.log(y / self.gamma)
        lc = math.log(self.c_q)
        out = (
            math.log(self.a) + math.log(self.q) + lc - np.log(self.gamma)
            + (self.a - 1.0) * lr
            - (1.0 + self.q) * _softplus(lc + self.a * lr)
        )
        return _scalar_or_array(out)

    def pdf(self, y):
        return _scalar_or_array(np.exp(self.logpdf(y)))

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        out = np.where(y > 0, -np.expm1(-self.q * _softplus(self._log_w(y))), 0.0)
        return _scalar_or_array(out)

    def sf(self, y):
        y = np.asarray(y, dtype=float)
        out = np.where(y > 0, np.exp(-self.q * _softplus(self._log_w(y))), 1.0)
        return _scalar_or_array(out)

    def ppf(self, u):
        u = _probs(u)
        ratio = sm_c_q(u, self.q) / self.c_q
        return _scalar_or_array(self.gamma * ratio ** (1.0 / self.a))

    def sample(self, n: int, seed=None):
        """Inverse-transform draws. With array ``gamma``, ``n`` must match
        its length (one draw per quantile)."""
        if int(n) < 1:
            raise DomainError("sample size must be >= 1")
        u = _seed_stream(seed).draw(int(n))
        return np.asarray(self.ppf(u))

    def mode(self) -> float:
        a, q = self.a, self.q
        if a <= 1.0:
            return 0.0
        return float(self.scale * ((a - 1.0) / (a * q + 1.0)) ** (1.0 / a))

    def moment(self, r: float) -> float:
        """Raw moment ``E[Y**r]``; exists for ``-a < r < a*q``."""
        a, q = self.a, self.q
        if not (-a < r < a * q):
            raise MomentNotExistError(
                f"E[Y^r] for Singh-Maddala needs -a < r < a*q; got r={r}, a={a}, q={q}"
            )
        lb = log_beta(1.0 + r / a, q - r / a)
        return float(q * np.exp(r * np.log(self.scale) + lb))

    def truncated_moment(self, r: float, x: float, config: SpecFunConfig = DEFAULT_CONFIG) -> float:
        """``E[Y**r 1{Y > x}]`` for ``x > 0``; exists for ``r < a*q``."""
        a, q = self.a, self.q
        if not x > 0:
            raise DomainError(f"truncation point must be > 0, got {x!r}")
        if not r < a * q:
            raise MomentNotExistError(
                f"truncated moment for Singh-Maddala needs r < a*q; got r={r}, a={a}, q={q}"
            )
        b = float(self.scale)
        u = (x / b) ** a
        return q * b**r * _upper_kernel_integral(1.0 + r / a, 1.0 + q, u, config)


@dataclass(frozen=True, eq=False)
class QuantileDA:
    """Quantile-based Dagum; ``gamma`` is the ``tau``-th quantile."""

    a: float
    gamma: float | np.ndarray
    p: float
    tau: float

    def __post_init__(self):
        _positive("a", self.a)
        _positive("gamma", self.gamma)
        _positive("p", self.p)
        _probability("tau", self.tau)

    @property
    def e_p(self) -> float:
        return float(da_e_p(self.tau, self.p))

    @property
    def scale(self):
        return self.gamma * self.e_p ** (1.0 / self.a)

    def to_classical(self) -> ClassicalDA:
        return ClassicalDA(self.a, self.scale, self.p)

    def _log_w(self, y):
        # log((y/gamma)**a / e_p)
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            return self.a * np.log(np.where(y > 0, y, 0.0) / self.gamma) - math.log(self.e_p)

    def logpdf(self, y):
        y = _pos_support(y)
        lr = np.log(y / self.gamma)
        le = math.log(self.e_p)
        a, p = self.a, self.p
        out = (
            math.log(a) + math.log(p) - np.log(self.gamma) - p * le
            + (a * p - 1.0) * lr
            - (1.0 + p) * _softplus(a * lr - le)
        )
        return _scalar_or_array(out)

    def pdf(self, y):
        return _scalar_or_array(np.exp(self.logpdf(y)))

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        out = np.where(y > 0, np.exp(-self.p * _softplus(-self._log_w(y))), 0.0)
        return _scalar_or_array(out)

    def sf(self, y):
        y = np.asarray(y, dtype=float)
        out = np.where(y > 0, -np.expm1(-self.p * _softplus(-self._log_w(y))), 1.0)
        return _scalar_or_array(out)

    def ppf(self, u):
        u = _probs(u)
        ratio = self.e_p / da_e_p(u, self.p)
        return _scalar_or_array(self.gamma * ratio ** (1.0 / self.a))

    def sample(self, n: int, seed=None):
        if int(n) < 1:
            raise DomainError("sample size must be >= 1")
        u = _seed_stream(seed).draw(int(n))
        return np.asarray(self.ppf(u))

    def mode(self) -> float:
        a, p = self.a, self.p
        if a * p <= 1.0:
            return 0.0
        return float(self.scale * ((a * p - 1.0) / (a + 1.0)) ** (1.0 / a))

    def moment(self, r: float) -> float:
        """Raw moment ``E[Y**r]``; exists for ``-a*p < r < a``."""
        a, p = self.a, self.p
        if not (-a * p < r < a):
            raise MomentNotExistError(
                f"E[Y^r] for Dagum needs -a*p < r < a; got r={r}, a={a}, p={p}"
            )
        lb = log_beta(p + r / a, 1.0 - r / a)
        return float(p * np.exp(r * np.log(self.scale) + lb))

    def truncated_moment(self, r: float, x: float, config: SpecFunConfig = DEFAULT_CONFIG) -> float:
        """``E[Y**r 1{Y > x}]`` for ``x > 0``; exists for ``r < a``."""
        a, p = self.a, self.p
        if not x > 0:
            raise DomainError(f"truncation point must be > 0, got {x!r}")
        if not r < a:
            raise MomentNotExistError(
                f"truncated moment for Dagum needs r < a; got r={r}, a={a}"
            )
        b = float(self.scale)
        u = (x / b) ** a
        return p * b**r * _upper_kernel_integral(p + r / a, 1.0 + p, u, config)


# --------------------------------------------------------------------------
# functional surface


def sm_logpdf(params: ClassicalSM, y):
    return params.logpdf(y)


def sm_pdf(params: ClassicalSM, y):
    return params.pdf(y)


def sm_cdf(params: ClassicalSM, y):
    return params.cdf(y)


def sm_quantile(params: ClassicalSM, tau):
    return params.ppf(tau)


def da_logpdf(params: ClassicalDA, y):
    return params.logpdf(y)


def da_pdf(params: ClassicalDA, y):
    return params.pdf(y)


def da_cdf(params: ClassicalDA, y):
    return params.cdf(y)


def da_quantile(params: ClassicalDA, tau):
    return params.ppf(tau)


def qsm_logpdf(params: QuantileSM, y):
    return params.logpdf(y)


def qsm_pdf(params: QuantileSM, y):
    return params.pdf(y)


def qsm_cdf(params: QuantileSM, y):
    return params.cdf(y)


def qsm_quantile(params: QuantileSM, u):
    return params.ppf(u)


def qsm_sample(params: QuantileSM, n: int, seed=None):
    return params.sample(n, seed)


def qsm_mode(params: QuantileSM) -> float:
    return params.mode()


def qsm_moment(params: QuantileSM, r: float) -> float:
    return params.moment(r)


def qsm_truncated_moment(params: QuantileSM, r: float, x: float) -> float:
    return params.truncated_moment(r, x)


def qda_logpdf(params: QuantileDA, y):
    return params.logpdf(y)


def qda_pdf(params: QuantileDA, y):
    return params.pdf(y)


def qda_cdf(params: QuantileDA, y):
    return params.cdf(y)


def qda_quantile(params: QuantileDA, u):
    return params.ppf(u)


def qda_sample(params: QuantileDA, n: int, seed=None):
    return params.sample(n, seed)


def qda_mode(params: QuantileDA) -> float:
    return params.mode()


def qda_moment(params: QuantileDA, r: float) -> float:
    return params.moment(r)


def qda_truncated_moment(params: QuantileDA, r: float, x: float) -> float:
    return params.truncated_moment(r, x)
