"""Residuals, simulated envelopes and prediction bands for fitted models."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from incomeqr.errors import DataError, DomainError, IncomeQRError
from incomeqr.regression import DesignData, FitResult, fit, predict_gamma
from incomeqr.specfun import UniformStream, std_normal_quantile

__all__ = [
    "CDF_CLAMP",
    "ResidualSummary",
    "ResidualReport",
    "EnvelopeBand",
    "PredictionBand",
    "fitted_probabilities",
    "gcs_residuals",
    "rq_residuals",
    "residual_summary",
    "residual_report",
    "simulated_envelope",
    "prediction_interval",
]

CDF_CLAMP = 1e-15


def fitted_probabilities(fit_result: FitResult, data: DesignData) -> tuple[np.ndarray, np.ndarray]:
    """Clamped ``(F(y_i), 1 - F(y_i))`` under the fitted conditional laws.

    Both tails are computed directly rather than by subtraction.
    """
    gamma = predict_gamma(fit_result, data.X)
    dist = fit_result.distribution(gamma)
    F = np.clip(np.asarray(dist.cdf(data.y)), CDF_CLAMP, 1.0 - CDF_CLAMP)
    S = np.clip(np.asarray(dist.sf(data.y)), CDF_CLAMP, 1.0 - CDF_CLAMP)
    return F, S


def _normal_quantile_two_tailed(F, S):
    # Phi^{-1}(F) evaluated from whichever tail is small
    return np.where(F <= 0.5, std_normal_quantile(F), -std_normal_quantile(S))


def gcs_residuals(fit_result: FitResult, data: DesignData) -> np.ndarray:
    """Generalized Cox-Snell residuals ``-log(1 - F(y_i))``."""
    _, S = fitted_probabilities(fit_result, data)
    return -np.log(S)


def rq_residuals(fit_result: FitResult, data: DesignData) -> np.ndarray:
    """Quantile residuals ``Phi^{-1}(F(y_i))``.

    The response is continuous so no randomization is involved.
    """
    F, S = fitted_probabilities(fit_result, data)
    return _normal_quantile_two_tailed(F, S)


@dataclass(frozen=True)
class ResidualSummary:
    mean: float
    median: float
    sd: float
    skewness: float
    kurtosis: float

    def as_dict(self) -> dict:
        return {"mean": self.mean, "median": self.median, "sd": self.sd,
                "skewness": self.skewness, "kurtosis": self.kurtosis}


def residual_summary(residuals) -> ResidualSummary:
    """Mean, median, sd (n-1), moment skewness and excess kurtosis."""
    r = np.asarray(residuals, dtype=float).ravel()
    if r.size < 3:
        raise DataError("need at least 3 residuals for a summary")
    mean = float(np.mean(r))
    d = r - mean
    m2 = float(np.mean(d**2))
    sd = float(np.std(r, ddof=1))
    if not m2 > 0 or sd == 0.0:
        raise DataError("residuals are constant; summary is undefined")
    return ResidualSummary(
        mean=mean,
        median=float(np.median(r)),
        sd=sd,
        skewness=float(np.mean(d**3) / m2**1.5),
        kurtosis=float(np.mean(d**4) / m2**2 - 3.0),
    )


@dataclass(frozen=True, eq=False)
class ResidualReport:
    gcs: np.ndarray
    rq: np.ndarray
    gcs_summary: ResidualSummary
    rq_summary: ResidualSummary

    def as_dict(self) -> dict:
        return {"gcs": self.gcs_summary.as_dict(), "rq": self.rq_summary.as_dict()}


def residual_report(fit_result: FitResult, data: DesignData) -> ResidualReport:
    gcs = gcs_residuals(fit_result, data)
    rq = rq_residuals(fit_result, data)
    return ResidualReport(gcs, rq, residual_summary(gcs), residual_summary(rq))


@dataclass(frozen=True, eq=False)
class EnvelopeBand:
    residual_type: str
    sorted_residuals: np.ndarray
    theoretical_quantiles: np.ndarray
    lower: np.ndarray
    median: np.ndarray
    upper: np.ndarray
    n_sim: int
    level: float
    n_dropped: int = 0

    @property
    def outside_fraction(self) -> float:
        obs = self.sorted_residuals
        return float(np.mean((obs < self.lower) | (obs > self.upper)))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "theoretical", "observed", "lower", "median", "upper"])
        for i in range(self.sorted_residuals.size):
            w.writerow([i + 1] + [f"{v:.6g}" for v in (
                self.theoretical_quantiles[i], self.sorted_residuals[i],
                self.lower[i], self.median[i], self.upper[i])])
        return buf.getvalue()


def _theoretical_quantiles(residual_type: str, n: int) -> np.ndarray:
    pp = (np.arange(1, n + 1) - 0.5) / n
    if residual_type == "gcs":
        return -np.log1p(-pp)
    return np.asarray(std_normal_quantile(pp))


def _residuals(residual_type: str, fit_result: FitResult, data: DesignData) -> np.ndarray:
    if residual_type == "gcs":
        return gcs_residuals(fit_result, data)
    if residual_type == "rq":
        return rq_residuals(fit_result, data)
    raise DomainError(f"unknown residual type {residual_type!r}; use 'gcs' or 'rq'")


def simulated_envelope(fit_result: FitResult, data: DesignData, residual_type: str = "rq",
                       n_sim: int = 100, level: float = 0.95, seed=0,
                       max_drop_fraction: float = 0.2) -> EnvelopeBand:
    """Pointwise simulation band for the sorted residuals of a fit.

    Each replicate draws a response vector from the fitted model at the
    observed covariates, refits it (warm-started at the original estimate)
    and sorts its residuals. Replicates whose refit fails are dropped; more
    than ``max_drop_fraction`` dropped replicates is an error.
    """
    if n_sim < 19:
        raise DomainError("n_sim must be at least 19")
    if not (0.0 < level < 1.0):
        raise DomainError("level must lie in (0, 1)")
    observed = np.sort(_residuals(residual_type, fit_result, data))
    gamma = predict_gamma(fit_result, data.X)
    dist = fit_result.distribution(gamma)
    streams = UniformStream(seed).spawn(n_sim)
    sims = []
    dropped = 0
    for stream in streams:
        y_star = np.asarray(dist.ppf(stream.draw(data.n)))
        try:
            sim_data = DesignData(data.X, y_star)
            refit = fit(fit_result.spec, sim_data, init=fit_result.estimates)
        except IncomeQRError:
            dropped += 1
            continue
        if not refit.converged:
            dropped += 1
            continue
        sims.append(np.sort(_residuals(residual_type, refit, sim_data)))
    if dropped > max_drop_fraction * n_sim:
        raise IncomeQRError(f"{dropped} of {n_sim} envelope replicates failed to refit")
    sims = np.vstack(sims)
    lo_q, hi_q = 0.5 * (1.0 - level), 0.5 * (1.0 + level)
    lower, median, upper = np.quantile(sims, [lo_q, 0.5, hi_q], axis=0)
    return EnvelopeBand(
        residual_type=residual_type,
        sorted_residuals=observed,
        theoretical_quantiles=_theoretical_quantiles(residual_type, data.n),
        lower=lower,
        median=median,
        upper=upper,
        n_sim=n_sim,
        level=level,
        n_dropped=dropped,
    )


@dataclass(frozen=True, eq=False)
class PredictionBand:
    lower: np.ndarray
    point: np.ndarray
    upper: np.ndarray
    level: float
    coverage_observed: float | None = None

    def as_dict(self) -> dict:
        return {"level": self.level, "lower": self.lower.tolist(), "point": self.point.tolist(),
                "upper": self.upper.tolist(), "coverage_observed": self.coverage_observed}


def prediction_interval(fit_result: FitResult, X_new, level: float = 0.95,
                        y_true=None) -> PredictionBand:
    """Central ``level`` band of the fitted conditional law per new row.

    The point is the fitted quantile ``gamma_i``, so it lies inside the band
    whenever ``(1 - level)/2 < tau < (1 + level)/2``. Parameter uncertainty
    is not propagated.
    """
    if not (0.0 < level < 1.0):
        raise DomainError("level must lie in (0, 1)")
    gamma = predict_gamma(fit_result, X_new)
    dist = fit_result.distribution(gamma)
    lo_u, hi_u = 0.5 * (1.0 - level), 0.5 * (1.0 + level)
    lower = np.atleast_1d(dist.ppf(np.full(gamma.shape, lo_u)))
    upper = np.atleast_1d(dist.ppf(np.full(gamma.shape, hi_u)))
    coverage = None
    if y_true is not None:
        y_true = np.asarray(y_true, dtype=float).ravel()
        if y_true.shape != gamma.shape:
            raise DataError("y_true must have one entry per prediction row")
        coverage = float(np.mean((y_true >= lower) & (y_true <= upper)))
    return PredictionBand(lower, gamma, upper, level, coverage)

