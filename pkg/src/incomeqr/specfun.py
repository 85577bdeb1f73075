"""Special functions and the seeded uniform generator.

Everything here is scalar-first; the normal CDF and quantile also accept
arrays. ``gauss_2f1`` only supports real parameters and a non-positive
argument, which covers every truncated-moment formula in the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from incomeqr._accel import njit
from incomeqr.errors import DomainError, NonConvergenceError

__all__ = [
    "SpecFunConfig",
    "DEFAULT_CONFIG",
    "log_gamma",
    "beta_fn",
    "log_beta",
    "gauss_2f1",
    "std_normal_cdf",
    "std_normal_pdf",
    "std_normal_quantile",
    "UniformStream",
    "seeded_uniform_stream",
]


@dataclass(frozen=True)
class SpecFunConfig:
    series_tolerance: float = 1e-12
    max_series_terms: int = 10000

    def __post_init__(self):
        if not self.series_tolerance > 0:
            raise DomainError("series_tolerance must be positive")
        if self.max_series_terms < 1:
            raise DomainError("max_series_terms must be at least 1")


DEFAULT_CONFIG = SpecFunConfig()

# Lanczos approximation, g = 7, nine terms (Godfrey's coefficients).
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _lanczos_lgamma(x: float) -> float:
    if x < 0.5:
        # shift up one step; keeps the Lanczos sum in its accurate range
        return _lanczos_lgamma(x + 1.0) - math.log(x)
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[i] / (x + i)
    t = x + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (x + 0.5) * math.log(t) - t + math.log(acc)


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    x = float(x)
    if not x > 0 or math.isinf(x):
        raise DomainError(f"log_gamma requires a finite x > 0, got {x!r}")
    if x == 1.0 or x == 2.0:
        return 0.0
    return _lanczos_lgamma(x)


def log_beta(x: float, y: float) -> float:
    if not (x > 0 and y > 0):
        raise DomainError(f"beta function requires x, y > 0, got ({x!r}, {y!r})")
    return log_gamma(x) + log_gamma(y) - log_gamma(x + y)


def beta_fn(x: float, y: float) -> float:
    """Beta function B(x, y), evaluated through log-gamma."""
    return math.exp(log_beta(x, y))


@njit
def _hyp2f1_series(a, b, c, z, tol, max_terms):
    """Sum the 2F1 power series.

    Returns (value, terms used or -1, largest absolute partial term).
    """
    term = 1.0
    total = 1.0
    biggest = 1.0
    az = abs(z)
    for n in range(max_terms):
        ratio = (a + n) * (b + n) / ((c + n) * (n + 1.0))
        term *= ratio * z
        total += term
        if abs(term) > biggest:
            biggest = abs(term)
        if term == 0.0:
            return total, n + 1, biggest
        nxt = abs((a + n + 1.0) * (b + n + 1.0) / ((c + n + 1.0) * (n + 2.0)) * z)
        rho = max(nxt, az)
        if rho < 1.0:
            # geometric bound on the remaining tail
            if abs(term) * rho / (1.0 - rho) <= tol * abs(total):
                return total, n + 1, biggest
    return total, -1, biggest


def _cancellation(value, biggest):
    return biggest / abs(value) if value != 0.0 else math.inf


def _is_nonpositive_integer(v: float) -> bool:
    return v <= 0 and float(v).is_integer()


def gauss_2f1(
    a: float,
    b: float,
    c: float,
    z: float,
    config: SpecFunConfig = DEFAULT_CONFIG,
    method: str = "auto",
) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; z) for real ``z <= 0``.

    Parameters
    ----------
    a, b, c : float
        Real parameters; ``c`` must not be a non-positive integer.
    z : float
        Argument, ``z <= 0``.
    config : SpecFunConfig
        Series tolerance and term budget.
    method : {"auto", "series", "pfaff"}
        ``auto`` sums the defining series when ``|z| < 0.9`` and otherwise
        applies the Pfaff transformation
        ``(1 - z)**(-b) * 2F1(c - a, b; c; z / (z - 1))``. When the direct
        series cancels away more than three digits, ``auto`` takes the
        Pfaff value instead if that one is better conditioned. The other
        two force one route (``series`` still needs ``|z| < 1``).

    Raises
    ------
    DomainError
        For ``c`` a non-positive integer, ``z > 0`` or a bad ``method``.
    NonConvergenceError
        If the series does not settle within ``config.max_series_terms``.
    """
    a, b, c, z = float(a), float(b), float(c), float(z)
    if _is_nonpositive_integer(c):
        raise DomainError(f"2F1 undefined for non-positive integer c={c!r}")
    if not z <= 0 or math.isnan(z):
        raise DomainError(f"gauss_2f1 supports z <= 0 only, got z={z!r}")
    if method not in ("auto", "series", "pfaff"):
        raise DomainError(f"unknown 2F1 method {method!r}")
    if z == 0.0:
        return 1.0
    tol, budget = config.series_tolerance, config.max_series_terms
    if method == "pfaff" or (method == "auto" and z <= -0.9):
        return _pfaff(a, b, c, z, tol, budget)[0]
    if z <= -1.0:
        raise DomainError("direct 2F1 series diverges for |z| >= 1")
    value, used, biggest = _hyp2f1_series(a, b, c, z, tol, budget)
    if method == "auto":
        # an alternating series with large terms loses digits; the Pfaff
        # form has a positive argument and is usually better conditioned
        loss = _cancellation(value, biggest)
        if used < 0 or loss > 1e3:
            try:
                alt, alt_loss = _pfaff(a, b, c, z, tol, budget)
            except NonConvergenceError:
                alt, alt_loss = math.nan, math.inf
            if alt_loss < loss:
                return alt
    if used < 0:
        raise NonConvergenceError(f"2F1 series did not converge in {budget} terms")
    return value


def _pfaff(a, b, c, z, tol, budget):
    """Pfaff-transformed value and its cancellation ratio."""
    zeta = z / (z - 1.0)
    value, used, biggest = _hyp2f1_series(c - a, b, c, zeta, tol, budget)
    if used < 0:
        raise NonConvergenceError(f"2F1 series did not converge in {budget} terms")
    return math.exp(-b * math.log1p(-z)) * value, _cancellation(value, biggest)


_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


def std_normal_cdf(z):
    """Standard normal CDF via the complementary error function."""
    out = 0.5 * erfc(-np.asarray(z, dtype=float) / _SQRT2)
    return out if out.ndim else float(out)


def std_normal_pdf(z):
    z = np.asarray(z, dtype=float)
    out = np.exp(-0.5 * z * z) / _SQRT2PI
    return out if out.ndim else float(out)


# Acklam's rational approximation to the normal quantile.
_ACK_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
          1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_ACK_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
          6.680131188771972e01, -1.328068155288572e01)
_ACK_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
          -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_ACK_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
          3.754408661907416e00)
_P_LOW = 0.02425


def _acklam_lower(v: np.ndarray) -> np.ndarray:
    """Initial quantile estimate for v in (0, 0.5]."""
    out = np.empty_like(v)
    tail = v < _P_LOW
    if np.any(tail):
        s = np.sqrt(-2.0 * np.log(v[tail]))
        c, d = _ACK_C, _ACK_D
        out[tail] = (((((c[0] * s + c[1]) * s + c[2]) * s + c[3]) * s + c[4]) * s + c[5]) / (
            (((d[0] * s + d[1]) * s + d[2]) * s + d[3]) * s + 1.0
        )
    mid = ~tail
    if np.any(mid):
        s = v[mid] - 0.5
        r = s * s
        a, b = _ACK_A, _ACK_B
        out[mid] = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * s / (
            ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
        )
    return out


def std_normal_quantile(u):
    """Inverse standard normal CDF on the open unit interval.

    The rational approximation is polished with one Halley step against
    :func:`std_normal_cdf`. Work happens in the lower half and is mirrored,
    so the result is odd-symmetric about 0.5.
    """
    u = np.asarray(u, dtype=float)
    if np.any(~((u > 0) & (u < 1))):
        raise DomainError("std_normal_quantile requires 0 < u < 1")
    upper = u > 0.5
    v = np.where(upper, 1.0 - u, u)
    x = _acklam_lower(np.atleast_1d(v)).reshape(v.shape)
    e = 0.5 * erfc(-x / _SQRT2) - v
    step = e * _SQRT2PI * np.exp(0.5 * x * x)
    x = x - step / (1.0 + 0.5 * x * step)
    x = np.where(upper, -x, x)
    x = np.where(v == 0.5, 0.0, x)
    return x if x.ndim else float(x)


class UniformStream:
    """Reproducible stream of doubles strictly inside (0, 1).

    Backed by the PCG64 generator (128-bit state). Each raw 64-bit output
    keeps its top 53 bits ``k`` and maps to ``(k + 0.5) / 2**53``, so 0 and
    1 are never produced.
    """

    _SCALE = 2.0 ** -53

    def __init__(self, seed):
        if isinstance(seed, np.random.SeedSequence):
            self._seedseq = seed
        else:
            self._seedseq = np.random.SeedSequence(seed)
        self._bitgen = np.random.PCG64(self._seedseq)

    def draw(self, n: int) -> np.ndarray:
        raw = self._bitgen.random_raw(int(n))
        return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * self._SCALE

    def spawn(self, k: int) -> list[UniformStream]:
        return [UniformStream(s) for s in self._seedseq.spawn(k)]

    def __iter__(self):
        return self

    def __next__(self) -> float:
        return float(self.draw(1)[0])


def seeded_uniform_stream(seed) -> UniformStream:
    """Return a :class:`UniformStream`; ``seed`` is an int, a sequence of
    ints, or a ``numpy.random.SeedSequence``."""
    return UniformStream(seed)
