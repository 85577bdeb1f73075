import json
import math

import numpy as np
import pytest

from incomeqr import montecarlo
from incomeqr.errors import DomainError
from incomeqr.montecarlo import (
    DEFAULT_N_GRID,
    DEFAULT_TAU_GRID,
    ScenarioConfig,
    generate_replica,
    standard_scenario,
    rb_rmse_cp,
    run_study,
)
from incomeqr.regression import Family


def tiny(family="sm", **kw):
    base = dict(tau_grid=(0.5,), n_grid=(60,), n_replicas=6)
    base.update(kw)
    return standard_scenario(family, **base)


class TestEstimators:
    def test_exact_estimates(self):
        assert rb_rmse_cp([2.0, 2.0], [1.0, 1.5], [3.0, 2.5], 2.0) == (0.0, 0.0, 1.0)

    def test_bias_cancels(self):
        rb, rmse, cp = rb_rmse_cp([2.0, 0.0], [0, 0], [3, 3], 1.0)
        assert rb == 0.0 and rmse == 1.0

    def test_no_coverage(self):
        assert rb_rmse_cp([5.0, 6.0], [4.0, 5.0], [4.5, 5.5], 1.0)[2] == 0.0

    def test_zero_truth(self):
        rb, rmse, _ = rb_rmse_cp([0.1, -0.1], [-1, -1], [1, 1], 0.0)
        assert rb is None and math.isclose(rmse, 0.1)

    def test_validation(self):
        with pytest.raises(DomainError):
            rb_rmse_cp([], [], [], 1.0)
        with pytest.raises(DomainError):
            rb_rmse_cp([1.0], [0.0, 0.0], [2.0], 1.0)


class TestConfig:
    def test_standard_defaults(self):
        cfg = standard_scenario("dagum")
        assert cfg.true_shapes == (1.0, 0.5)
        assert cfg.n_grid == DEFAULT_N_GRID and cfg.tau_grid == DEFAULT_TAU_GRID
        assert cfg.param_names == ["beta0", "beta1", "beta2", "a", "p"]
        assert standard_scenario("sm").true_shapes == (5.0, 1.0)

    def test_validation(self):
        with pytest.raises(DomainError):
            ScenarioConfig(Family.QSM, n_replicas=0)
        with pytest.raises(DomainError):
            ScenarioConfig(Family.QSM, n_grid=(5,))
        with pytest.raises(DomainError):
            ScenarioConfig(Family.QSM, tau_grid=(1.0,))


class TestGeneration:
    def test_deterministic(self):
        cfg = standard_scenario("sm")
        a, b = generate_replica(cfg, 50, 0.25, 3), generate_replica(cfg, 50, 0.25, 3)
        np.testing.assert_array_equal(a.X, b.X)
        np.testing.assert_array_equal(a.y, b.y)
        c = generate_replica(cfg, 50, 0.25, 4)
        assert not np.array_equal(a.y, c.y)

    def test_covariates_uniform_with_intercept(self):
        d = generate_replica(standard_scenario("sm"), 2000, 0.5, 0)
        assert np.all(d.X[:, 0] == 1.0)
        assert np.all((d.X[:, 1:] > 0) & (d.X[:, 1:] < 1))
        assert abs(d.X[:, 1:].mean() - 0.5) < 0.02

    def test_quantile_at_origin_cell(self):
        # near x = (0, 0) the conditional tau-quantile is about e^1
        cfg = standard_scenario("sm")
        ys = []
        for idx in range(4):
            d = generate_replica(cfg, 20000, 0.75, idx)
            near = np.all(d.X[:, 1:] < 0.05, axis=1)
            ys.append(d.y[near])
        y = np.concatenate(ys)
        g_near = math.exp(1 + 0.5 * 0.025 + 1.5 * 0.025)
        assert np.quantile(y, 0.75) == pytest.approx(g_near, rel=0.05)

    @pytest.mark.parametrize("family", ["sm", "dagum"])
    def test_scaled_response_has_unit_quantile(self, family):
        cfg = standard_scenario(family)
        d = generate_replica(cfg, 100_000, 0.1, 0)
        gamma = np.exp(d.X @ np.array(cfg.true_beta))
        assert abs(np.mean(d.y <= gamma) - 0.1) < 4 * math.sqrt(0.09 / 100_000)


class TestStudy:
    def test_deterministic_report(self):
        a = run_study(tiny())
        b = run_study(tiny())
        assert a.to_json() == b.to_json()
        assert a.to_csv() == b.to_csv()

    def test_parallel_matches_serial(self):
        cfg = tiny("dagum")
        assert run_study(cfg, workers=2).to_json() == run_study(cfg).to_json()

    def test_report_layout(self):
        rep = run_study(tiny(n_grid=(60, 80), tau_grid=(0.25, 0.75)))
        assert len(rep.cells) == 4
        cell = rep.cell(80, 0.75)
        assert set(cell.params) == {"beta0", "beta1", "beta2", "a", "q"}
        for stats in cell.params.values():
            assert stats["rb"] >= 0 and 0 <= stats["cp"] <= 1
        assert set(cell.residuals) == {"gcs", "rq"}
        header = rep.to_csv().splitlines()[0]
        assert header == "family,n,tau,parameter,statistic,value"
        doc = json.loads(rep.to_json())
        assert doc["config"]["base_seed"] == 20240101
        with pytest.raises(KeyError):
            rep.cell(61, 0.75)

    def test_failed_replicas_abort_cell(self, monkeypatch):
        real = montecarlo._fit_replica

        def flaky(config, n, tau, idx):
            return None if idx < 2 else real(config, n, tau, idx)

        monkeypatch.setattr(montecarlo, "_fit_replica", flaky)
        rep = run_study(tiny(n_replicas=10))
        cell = rep.cells[0]
        assert cell.n_failed == 2 and cell.aborted and cell.params == {}

    def test_failures_excluded_from_aggregates(self, monkeypatch):
        real = montecarlo._fit_replica

        def flaky(config, n, tau, idx):
            return None if idx == 0 else real(config, n, tau, idx)

        monkeypatch.setattr(montecarlo, "_fit_replica", flaky)
        rep = run_study(tiny(n_replicas=12))
        cell = rep.cells[0]
        assert cell.n_failed == 1 and not cell.aborted
        theta = np.array([real(tiny(), 60, 0.5, i)[0][0] for i in range(1, 12)])
        assert cell.params["beta0"]["mean"] == pytest.approx(theta.mean(), rel=1e-12)

    @pytest.mark.slow
    def test_full_default_grid_has_all_cells(self):
        rep = run_study(standard_scenario("sm", n_replicas=2), workers=4)
        assert {(c.n, c.tau) for c in rep.cells} == {(n, t) for n in DEFAULT_N_GRID for t in DEFAULT_TAU_GRID}
