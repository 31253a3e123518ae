"""Integrated squared errors against quadrature, forecast scores, and
CDF-inversion prediction intervals."""
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

import bayesbw as bw
from bayesbw.errors import ValidationError
from bayesbw.metrics import error_cdf_grid
from bayesbw.selectors import rot_density_bandwidth


class TestIseRegression:
    def test_zero_when_equal(self):
        grid = bw.regular_grid(0.0, 1.0)
        f = lambda pts: np.sin(pts[:, 0])
        assert bw.ise_regression(f, f, grid) == 0.0

    def test_constant_offset(self):
        grid = bw.regular_grid(0.0, 1.0)
        truth = lambda pts: np.cos(pts[:, 0])
        est = lambda pts: np.cos(pts[:, 0]) + 0.3
        assert bw.ise_regression(est, truth, grid) == pytest.approx(0.09, abs=1e-12)

    def test_matches_adaptive_quadrature(self):
        truth = lambda pts: np.cos(2 * np.pi * pts[:, 0]) + np.sin(2 * np.pi * pts[:, 0])
        coef = np.array([0.9, 0.5, -1.2, 0.3, -0.4])
        est = lambda pts: np.polyval(coef, pts[:, 0])
        grid = bw.regular_grid(0.0, 1.0)
        got = bw.ise_regression(est, truth, grid)
        exact, _ = quad(
            lambda x: (np.polyval(coef, x)
                       - math.cos(2 * math.pi * x) - math.sin(2 * math.pi * x)) ** 2,
            0.0, 1.0, limit=200)
        assert got == pytest.approx(exact, rel=5e-3)

    def test_multivariate_volume_scaling(self):
        grid = bw.qmc_grid(np.zeros(3), np.ones(3), seed=1)
        est = lambda pts: np.full(pts.shape[0], 0.5)
        truth = lambda pts: np.zeros(pts.shape[0])
        assert bw.ise_regression(est, truth, grid) == pytest.approx(0.25, abs=1e-12)

    def test_nonfinite_estimate_rejected(self):
        grid = bw.regular_grid(0.0, 1.0, m=10)

        def bad(pts):
            out = np.zeros(pts.shape[0])
            out[3] = np.nan
            return out

        with pytest.raises(ValidationError):
            bw.ise_regression(bad, lambda p: np.zeros(p.shape[0]), grid)


class TestIseDensity:
    def test_zero_against_itself(self, rng):
        e = rng.normal(size=50)
        b = 0.4
        kde = lambda z: bw.error_density(e, b, z)
        assert bw.ise_density(e, b, kde, 1.0) == pytest.approx(0.0, abs=1e-300)

    def test_large_sample_consistency(self):
        rng = np.random.default_rng(7)
        e = rng.normal(0.0, 0.5, size=5000)
        b = rot_density_bandwidth(e)
        truth = lambda z: norm.pdf(z, 0.0, 0.5)
        assert bw.ise_density(e, b, truth, 0.5) < 0.005

    def test_mixture_truth_normalizes(self):
        truth = lambda z: (0.7 * norm.pdf(z, 0, 0.4) + 0.3 * norm.pdf(z, 0, 0.8))
        mass, _ = quad(truth, -8 * 0.8, 8 * 0.8, limit=200)
        assert mass == pytest.approx(1.0, abs=1e-9)


class TestForecastScores:
    def test_perfect(self):
        s = bw.forecast_scores([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert (s.msfe, s.mafe, s.mape) == (0.0, 0.0, 0.0)

    def test_single_miss(self):
        actual = np.ones(37)
        forecast = actual.copy()
        forecast[5] += 2.0
        s = bw.forecast_scores(actual, forecast)
        assert s.msfe == pytest.approx(4.0 / 37.0, rel=1e-12)
        assert s.mafe == pytest.approx(2.0 / 37.0, rel=1e-12)

    def test_mape_undefined_on_zero_actual(self):
        s = bw.forecast_scores([0.0, 1.0], [0.5, 1.0])
        assert not s.mape_defined
        assert math.isnan(s.mape)
        assert s.msfe > 0  # other scores still reported

    def test_jensen_inequality(self, rng):
        for _ in range(20):
            a = rng.normal(size=12)
            f = a + rng.normal(size=12)
            s = bw.forecast_scores(a, f)
            assert s.mafe ** 2 <= s.msfe + 1e-12


class TestPredictionInterval:
    def test_single_residual_standard_normal(self):
        iv = bw.prediction_interval(np.zeros(1), 1.0, 10.0, alpha=0.05)
        step = (0.0 + 6.0 - (0.0 - 6.0)) / 999
        assert iv.lower == pytest.approx(10.0 - 1.959964, abs=step)
        assert iv.upper == pytest.approx(10.0 + 1.959964, abs=step)

    def test_symmetric_residuals_symmetric_interval(self, rng):
        e = np.concatenate([rng.normal(size=200)])
        e = np.concatenate([e, -e])
        iv = bw.prediction_interval(e, 0.3, 5.0)
        z, _ = error_cdf_grid(e, 0.3)
        step = z[1] - z[0]
        assert (iv.upper - 5.0) == pytest.approx(5.0 - iv.lower, abs=2 * step)

    def test_width_nondecreasing_in_b(self, rng):
        e = rng.normal(size=100)
        widths = [bw.prediction_interval(e, b, 0.0).width
                  for b in (0.05, 0.1, 0.3, 0.6, 1.2)]
        assert all(w2 >= w1 - 1e-9 for w1, w2 in zip(widths, widths[1:]))

    def test_cdf_monotone_with_covered_tails(self, rng):
        e = rng.normal(size=60)
        z, cdf = error_cdf_grid(e, 0.25)
        assert (np.diff(cdf) >= -1e-15).all()
        assert cdf[0] < 0.001
        assert cdf[-1] > 0.999

    def test_alpha_domain(self):
        with pytest.raises(ValidationError):
            bw.prediction_interval(np.zeros(3), 0.5, 0.0, alpha=1.5)


class TestMise:
    def test_constant(self):
        assert bw.mise_aggregate([0.7, 0.7, 0.7]) == pytest.approx(0.7)

    def test_small_case(self):
        assert bw.mise_aggregate([1.0, 2.0, 3.0]) == pytest.approx(2.0)

    def test_matches_two_pass_mean(self, rng):
        v = rng.uniform(size=1000)
        total = math.fsum(float(x) for x in v)
        assert bw.mise_aggregate(v) == pytest.approx(total / 1000.0, abs=1e-12)


class TestGrids:
    def test_regular_grid_shape(self):
        g = bw.regular_grid(-1.0, 2.0, m=500)
        assert g.m == 500 and g.d == 1
        assert g.points[0, 0] == -1.0 and g.points[-1, 0] == 2.0

    def test_qmc_grid_deterministic_per_seed(self):
        a = bw.qmc_grid(np.zeros(2), np.ones(2), seed=5)
        c = bw.qmc_grid(np.zeros(2), np.ones(2), seed=5)
        np.testing.assert_array_equal(a.points, c.points)
        d = bw.qmc_grid(np.zeros(2), np.ones(2), seed=6)
        assert not np.array_equal(a.points, d.points)

    def test_ise_invariant_to_grid_point_order(self, rng):
        pts = rng.uniform(size=(400, 1))
        grid = bw.EvaluationGrid(points=pts, support_lo=[0.0], support_hi=[1.0])
        perm = rng.permutation(400)
        grid_p = bw.EvaluationGrid(points=pts[perm], support_lo=[0.0],
                                   support_hi=[1.0])
        truth = lambda p: np.zeros(p.shape[0])
        est = lambda p: np.sin(p[:, 0])
        # d=1 Riemann weighting is order-free because the weight is uniform
        a = bw.ise_regression(est, truth, grid)
        c = bw.ise_regression(est, truth, grid_p)
        assert a == pytest.approx(c, rel=1e-12)
