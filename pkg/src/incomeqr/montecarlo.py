"""Monte Carlo study of the ML estimators and the residuals.

For every ``(n, tau)`` cell, ``n_replicas`` datasets are generated from the
regression model with uniform(0, 1) covariates, each is refitted, and the
replicas are aggregated into relative bias, RMSE and Wald coverage per
parameter, plus averaged GCS/RQ residual summaries.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from incomeqr.diagnostics import residual_report
from incomeqr.errors import DomainError, IncomeQRError
from incomeqr.regression import (
    DesignData,
    Family,
    Link,
    RegressionSpec,
    conditional_distribution,
    design_matrix,
    fit,
    link_invert,
    wald_intervals,
)
from incomeqr.specfun import UniformStream

__all__ = [
    "DEFAULT_N_GRID",
    "DEFAULT_TAU_GRID",
    "ScenarioConfig",
    "CellResult",
    "MonteCarloReport",
    "standard_scenario",
    "generate_replica",
    "rb_rmse_cp",
    "run_study",
]

DEFAULT_N_GRID = (50, 100, 150, 250, 600)
DEFAULT_TAU_GRID = (0.10, 0.25, 0.50, 0.75, 0.90)
RESIDUAL_STATS = ("mean", "median", "sd", "skewness", "kurtosis")


@dataclass(frozen=True)
class ScenarioConfig:
    family: Family
    true_beta: tuple[float, ...] = (1.0, 0.5, 1.5)
    true_shapes: tuple[float, float] = (5.0, 1.0)
    tau_grid: tuple[float, ...] = DEFAULT_TAU_GRID
    n_grid: tuple[int, ...] = DEFAULT_N_GRID
    n_replicas: int = 200
    link: Link = Link.LOG
    base_seed: int = 20240101
    level: float = 0.95
    max_fail_fraction: float = 0.10

    def __post_init__(self):
        object.__setattr__(self, "family", Family.parse(self.family))
        object.__setattr__(self, "link", Link.parse(self.link))
        object.__setattr__(self, "true_beta", tuple(float(b) for b in self.true_beta))
        object.__setattr__(self, "true_shapes", tuple(float(s) for s in self.true_shapes))
        object.__setattr__(self, "tau_grid", tuple(float(t) for t in self.tau_grid))
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if self.n_replicas < 1:
            raise DomainError("n_replicas must be >= 1")
        if len(self.true_shapes) != 2 or min(self.true_shapes) <= 0:
            raise DomainError("true_shapes must be two positive numbers")
        k = len(self.true_beta)
        if any(n <= k + 2 for n in self.n_grid):
            raise DomainError("every sample size must exceed dim(beta) + 2")
        if any(not 0.0 < t < 1.0 for t in self.tau_grid):
            raise DomainError("tau values must lie in (0, 1)")

    @property
    def param_names(self) -> list[str]:
        return [f"beta{j}" for j in range(len(self.true_beta))] + ["a", self.family.shape2_name]

    @property
    def truth(self) -> np.ndarray:
        return np.array(self.true_beta + self.true_shapes)


def standard_scenario(family, **overrides) -> ScenarioConfig:
    """Regression scenario with betas (1, 0.5, 1.5) and the family's shapes:
    ``(a, q) = (5, 1)`` for Singh-Maddala, ``(a, p) = (1, 0.5)`` for Dagum."""
    family = Family.parse(family)
    shapes = (5.0, 1.0) if family is Family.QSM else (1.0, 0.5)
    kwargs = {"family": family, "true_shapes": shapes}
    kwargs.update(overrides)
    return ScenarioConfig(**kwargs)


def _replica_seed(config: ScenarioConfig, n: int, tau: float, replica_index: int):
    fam = 1 if config.family is Family.QSM else 2
    return np.random.SeedSequence([config.base_seed, fam, n, int(round(tau * 1_000_000)), replica_index])


def generate_replica(config: ScenarioConfig, n: int, tau: float, replica_index: int) -> DesignData:
    """One simulated dataset; a pure function of its arguments."""
    stream = UniformStream(_replica_seed(config, n, tau, replica_index))
    k = len(config.true_beta) - 1
    covariates = stream.draw(n * k).reshape(n, k)
    X = design_matrix(covariates, intercept=True)
    gamma = np.atleast_1d(link_invert(config.link, X @ np.array(config.true_beta)))
    a, s = config.true_shapes
    dist = conditional_distribution(RegressionSpec(config.family, tau, config.link), a, gamma, s)
    y = np.asarray(dist.ppf(stream.draw(n)))
    return DesignData(X, y)


def rb_rmse_cp(estimates, lowers, uppers, truth: float) -> tuple[float | None, float, float]:
    """Relative bias, RMSE and interval coverage of one parameter.

    ``rb`` is ``None`` when ``truth == 0``.
    """
    est = np.asarray(estimates, dtype=float)
    lo = np.asarray(lowers, dtype=float)
    hi = np.asarray(uppers, dtype=float)
    if est.size < 1 or est.shape != lo.shape or est.shape != hi.shape:
        raise DomainError("estimates, lowers and uppers must be equal-length and non-empty")
    rb = None if truth == 0 else float(abs((est.mean() - truth) / truth))
    rmse = float(math.sqrt(np.mean((est - truth) ** 2)))
    cp = float(np.mean((lo <= truth) & (truth <= hi)))
    return rb, rmse, cp


@dataclass
class CellResult:
    family: str
    n: int
    tau: float
    n_replicas: int
    n_failed: int
    aborted: bool
    params: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"family": self.family, "n": self.n, "tau": self.tau,
                "n_replicas": self.n_replicas, "n_failed": self.n_failed,
                "aborted": self.aborted, "params": self.params, "residuals": self.residuals}


@dataclass
class MonteCarloReport:
    config: ScenarioConfig
    cells: list[CellResult]

    def cell(self, n: int, tau: float) -> CellResult:
        for c in self.cells:
            if c.n == n and math.isclose(c.tau, tau):
                return c
        raise KeyError((n, tau))

    def records(self) -> list[tuple]:
        """Long format rows ``(family, n, tau, parameter, statistic, value)``."""
        rows = []
        for c in self.cells:
            rows.append((c.family, c.n, c.tau, "replicas", "failed", c.n_failed))
            for name, stats in c.params.items():
                for stat in ("rb", "rmse", "cp"):
                    rows.append((c.family, c.n, c.tau, name, stat, stats[stat]))
            for rtype, stats in c.residuals.items():
                for stat in RESIDUAL_STATS:
                    rows.append((c.family, c.n, c.tau, rtype, stat, stats[stat]))
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["family", "n", "tau", "parameter", "statistic", "value"])
        for fam, n, tau, par, stat, val in self.records():
            w.writerow([fam, n, f"{tau:.6g}", par, stat, "" if val is None else f"{val:.6g}"])
        return buf.getvalue()

    def as_dict(self) -> dict:
        cfg = self.config
        return {
            "config": {
                "family": cfg.family.value, "true_beta": list(cfg.true_beta),
                "true_shapes": list(cfg.true_shapes), "tau_grid": list(cfg.tau_grid),
                "n_grid": list(cfg.n_grid), "n_replicas": cfg.n_replicas,
                "link": cfg.link.value, "base_seed": cfg.base_seed, "level": cfg.level,
            },
            "cells": [c.as_dict() for c in self.cells],
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def _fit_replica(config: ScenarioConfig, n: int, tau: float, idx: int):
    """Return (theta, lower, upper, gcs summary, rq summary) or None."""
    data = generate_replica(config, n, tau, idx)
    spec = RegressionSpec(config.family, tau, config.link)
    try:
        res = fit(spec, data)
    except IncomeQRError:
        return None
    if not res.converged or res.std_errors is None:
        return None
    lo, hi = wald_intervals(res, config.level)
    try:
        rep = residual_report(res, data)
    except IncomeQRError:
        return None
    return res.theta, lo, hi, rep.gcs_summary.as_dict(), rep.rq_summary.as_dict()


def _run_cell(config: ScenarioConfig, n: int, tau: float, pool) -> CellResult:
    m = config.n_replicas
    if pool is None:
        outcomes = [_fit_replica(config, n, tau, i) for i in range(m)]
    else:
        outcomes = list(pool.map(_fit_replica, [config] * m, [n] * m, [tau] * m, range(m)))
    ok = [o for o in outcomes if o is not None]
    failed = m - len(ok)
    cell = CellResult(config.family.value, n, tau, m, failed, aborted=False)
    if failed > config.max_fail_fraction * m or not ok:
        cell.aborted = True
        return cell
    theta = np.vstack([o[0] for o in ok])
    lows = np.vstack([o[1] for o in ok])
    highs = np.vstack([o[2] for o in ok])
    truth = config.truth
    for j, name in enumerate(config.param_names):
        rb, rmse, cp = rb_rmse_cp(theta[:, j], lows[:, j], highs[:, j], truth[j])
        cell.params[name] = {"rb": rb, "rmse": rmse, "cp": cp, "mean": float(theta[:, j].mean())}
    for pos, rtype in ((3, "gcs"), (4, "rq")):
        cell.residuals[rtype] = {
            stat: float(math.fsum(o[pos][stat] for o in ok) / len(ok)) for stat in RESIDUAL_STATS
        }
    return cell


def run_study(config: ScenarioConfig, workers: int | None = None) -> MonteCarloReport:
    """Run every ``(n, tau)`` cell of the scenario.

    ``workers > 1`` fits replicas in a process pool; results are collected
    by replica index, so the report does not depend on scheduling.
    """
    pool = ProcessPoolExecutor(max_workers=workers) if workers and workers > 1 else None
    try:
        cells = [_run_cell(config, n, tau, pool) for n in config.n_grid for tau in config.tau_grid]
    finally:
        if pool is not None:
            pool.shutdown()
    return MonteCarloReport(config, cells)
