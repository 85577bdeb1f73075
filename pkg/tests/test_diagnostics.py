import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from incomeqr.diagnostics import (
    CDF_CLAMP,
    fitted_probabilities,
    gcs_residuals,
    prediction_interval,
    residual_report,
    residual_summary,
    rq_residuals,
    simulated_envelope,
)
from incomeqr.errors import DataError, DomainError
from incomeqr.montecarlo import generate_replica, standard_scenario
from incomeqr.regression import DesignData, Family, FitResult, ParamVector, RegressionSpec, fit
from incomeqr.specfun import UniformStream, std_normal_cdf


@pytest.fixture(scope="module")
def sm_case():
    data = generate_replica(standard_scenario("sm"), 1000, 0.5, 0)
    return data, fit(RegressionSpec(Family.QSM, 0.5), data)


@pytest.fixture(scope="module")
def small_case():
    data = generate_replica(standard_scenario("dagum"), 150, 0.25, 2)
    return data, fit(RegressionSpec(Family.QDA, 0.25), data)


def fixed_fit(family, tau, beta, a, s, n):
    """A FitResult at known parameters (no covariance)."""
    spec = RegressionSpec(family, tau)
    return FitResult(spec, ParamVector(beta, a, s), None, None, 0.0, 0.0, 0.0, True, 0, 0.0, n)


class TestResiduals:
    def test_at_fitted_quantile(self):
        res = fixed_fit(Family.QSM, 0.5, [0.3], 3.0, 1.2, 1)
        data = DesignData(np.ones((1, 1)), np.array([math.exp(0.3)]))
        assert gcs_residuals(res, data)[0] == pytest.approx(math.log(2.0), rel=1e-12)
        assert rq_residuals(res, data)[0] == pytest.approx(0.0, abs=1e-12)

    def test_known_probability_levels(self):
        res = fixed_fit(Family.QDA, 0.3, [0.0], 2.0, 1.5, 1)
        dist = res.distribution(np.array([1.0]))
        y1 = float(dist.ppf(np.array([1 - math.exp(-1)]))[0])
        y975 = float(dist.ppf(np.array([0.975]))[0])
        X = np.ones((1, 1))
        assert gcs_residuals(res, DesignData(X, [y1]))[0] == pytest.approx(1.0, rel=1e-10)
        assert rq_residuals(res, DesignData(X, [y975]))[0] == pytest.approx(1.959963985, abs=1e-8)

    def test_clamping_keeps_values_finite(self):
        res = fixed_fit(Family.QSM, 0.5, [0.0], 8.0, 3.0, 2)
        data = DesignData(np.ones((2, 1)), np.array([1e-30, 1e30]))
        F, S = fitted_probabilities(res, data)
        assert F[0] == CDF_CLAMP and S[1] == CDF_CLAMP
        assert np.all(np.isfinite(gcs_residuals(res, data)))
        assert np.all(np.isfinite(rq_residuals(res, data)))

    def test_rq_is_transform_of_gcs(self, sm_case):
        data, res = sm_case
        gcs = gcs_residuals(res, data)
        rq = rq_residuals(res, data)
        np.testing.assert_allclose(std_normal_cdf(rq), -np.expm1(-gcs), atol=1e-9)
        assert np.all(gcs >= 0)

    def test_well_specified_gcs(self, sm_case):
        data, res = sm_case
        s = residual_summary(gcs_residuals(res, data))
        assert abs(s.mean - 1) < 0.1 and abs(s.median - 0.69) < 0.08

    def test_well_specified_rq(self, sm_case):
        data, res = sm_case
        s = residual_summary(rq_residuals(res, data))
        assert abs(s.mean) < 0.1 and abs(s.sd - 1) < 0.1

    def test_report(self, small_case):
        data, res = small_case
        rep = residual_report(res, data)
        assert rep.gcs.shape == rep.rq.shape == (150,)
        assert set(rep.as_dict()) == {"gcs", "rq"}


class TestSummary:
    def test_symmetric_sample(self):
        s = residual_summary([-1.0, 0.0, 1.0])
        assert (s.mean, s.median, s.skewness) == (0.0, 0.0, 0.0)
        assert s.sd == 1.0

    def test_constant_rejected(self):
        with pytest.raises(DataError):
            residual_summary([2.0, 2.0, 2.0, 2.0])
        with pytest.raises(DataError):
            residual_summary([1.0, 2.0])

    def test_exponential_reference_values(self):
        e = -np.log(UniformStream(0).draw(1_000_000))
        s = residual_summary(e)
        for got, want in zip((s.mean, s.median, s.sd, s.skewness, s.kurtosis), (1, 0.69, 1, 2, 6)):
            assert abs(got - want) < 0.05

    @given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=50), st.floats(0.1, 10), st.floats(-5, 5))
    def test_affine_invariance_of_shape_statistics(self, xs, scale, shift):
        x = np.array(xs)
        if np.ptp(x) < 1e-6 * max(1.0, np.max(np.abs(x))):
            return
        a, b = residual_summary(x), residual_summary(scale * x + shift)
        assert b.skewness == pytest.approx(a.skewness, rel=1e-6, abs=1e-6)
        assert b.kurtosis == pytest.approx(a.kurtosis, rel=1e-6, abs=1e-6)
        assert b.sd == pytest.approx(scale * a.sd, rel=1e-9)


@pytest.fixture(scope="module")
def band(small_case):
    data, res = small_case
    return simulated_envelope(res, data, "rq", n_sim=40, seed=1)


class TestEnvelope:
    def test_ordering_and_shape(self, band):
        assert np.all(band.lower <= band.median) and np.all(band.median <= band.upper)
        assert band.sorted_residuals.shape == (150,)
        assert np.all(np.diff(band.sorted_residuals) >= 0)

    def test_well_specified_coverage(self, band):
        assert band.outside_fraction < 0.10

    def test_deterministic(self, small_case, band):
        data, res = small_case
        again = simulated_envelope(res, data, "rq", n_sim=40, seed=1)
        np.testing.assert_array_equal(again.lower, band.lower)
        np.testing.assert_array_equal(again.upper, band.upper)

    def test_gcs_plotting_positions(self, small_case):
        data, res = small_case
        band = simulated_envelope(res, data, "gcs", n_sim=19, seed=2)
        pp = (np.arange(1, 151) - 0.5) / 150
        np.testing.assert_allclose(band.theoretical_quantiles, -np.log1p(-pp))
        assert band.outside_fraction < 0.10

    def test_csv(self, band):
        lines = band.to_csv().splitlines()
        assert lines[0] == "index,theoretical,observed,lower,median,upper"
        assert len(lines) == 151
        assert all(len(v.split("e")[0].replace("-", "").replace(".", "")) <= 6 for v in lines[1].split(",")[1:])

    def test_validation(self, small_case):
        data, res = small_case
        with pytest.raises(DomainError):
            simulated_envelope(res, data, "rq", n_sim=10)
        with pytest.raises(DomainError):
            simulated_envelope(res, data, "pearson", n_sim=19)


class TestPrediction:
    def test_holdout_coverage(self):
        cfg = standard_scenario("sm")
        train = generate_replica(cfg, 600, 0.5, 10)
        hold = generate_replica(cfg, 2000, 0.5, 11)
        res = fit(RegressionSpec(Family.QSM, 0.5), train)
        band = prediction_interval(res, hold.X, 0.95, y_true=hold.y)
        assert abs(band.coverage_observed - 0.95) <= 0.02

    def test_twenty_rows(self, sm_case):
        data, res = sm_case
        hold = generate_replica(standard_scenario("sm"), 20, 0.5, 99)
        band = prediction_interval(res, hold.X, 0.95, y_true=hold.y)
        assert band.coverage_observed >= 0.9

    def test_band_structure(self, small_case):
        data, res = small_case
        X = data.X[:10]
        b90 = prediction_interval(res, X, 0.90)
        b99 = prediction_interval(res, X, 0.99)
        assert np.all(b90.lower < b90.point) and np.all(b90.point < b90.upper)
        assert np.all(b99.lower < b90.lower) and np.all(b99.upper > b90.upper)
        assert b90.coverage_observed is None
        with pytest.raises(DomainError):
            prediction_interval(res, X, 1.0)
        with pytest.raises(DataError):
            prediction_interval(res, X, 0.9, y_true=np.ones(3))
