import logging
import math

import numpy as np
import pytest
from scipy import integrate

from conftest import flat_spline, make_spline, random_lag_sums
from semispec.errors import EstimationError, ParameterError
from semispec.gridize import LagSums
from semispec.simulate import simulate
from semispec.models import CovarianceModel
from semispec.spline_spectral import (SplineSpectral, default_lambda_grid, eval_f_delta, fit_hhc,
                                      gcv_score, hhc_covariance, select_lambda_gcv,
                                      shrinkage_weights)

HAND = LagSums([13.0, 6.0], [2, 1])


def test_hand_case_at_zero():
    est = SplineSpectral(HAND, math.pi, 0.0)
    expected = (13 / 2) / math.pi + (2 / math.pi) * 6.0
    assert eval_f_delta(est, 0.0) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(5.889, abs=1e-3)


def test_large_lambda_limit(rng):
    ls = random_lag_sums(rng)
    est = SplineSpectral(ls, 2.0, 1e14)
    w = np.linspace(0, 2.0, 17)
    np.testing.assert_allclose(eval_f_delta(est, w), ls.s[0] / (2.0 * ls.n[0]), rtol=1e-9)


def test_white_noise_is_flat():
    est = flat_spline(2.5, omega_c=3.0)
    np.testing.assert_allclose(est(np.linspace(0, 3, 11)), 2.5 / 3.0, rtol=1e-15)


def test_weights():
    ls = LagSums([1.0, 2.0, 0.0, 3.0], [4, 5, 0, 7])
    w = shrinkage_weights(ls, 0.1)
    expected = [5 / (5 + 2 * math.pi ** 2 * 0.1), 0.0, 7 / (7 + 2 * (3 * math.pi) ** 2 * 0.1)]
    np.testing.assert_allclose(w, expected, rtol=1e-15)
    np.testing.assert_array_equal(shrinkage_weights(ls, 0.0), [1, 0, 1])


def test_direct_series(rng):
    est = make_spline(rng, k=9, omega_c=2.2)
    w = np.linspace(0, 2.2, 23)
    m = est.lag_sums.moments()
    k = np.arange(1, 10)
    direct = [(m[0] + 2 * np.sum(est.weights * m[1:] * np.cos(k * math.pi * x / 2.2))) / 2.2
              for x in w]
    np.testing.assert_allclose(est(w), direct, rtol=1e-12, atol=1e-13)


@pytest.mark.parametrize("h", [0.0, 0.5, 1.0, 5.0, 2.0 / 2.2 * 3])
def test_covariance_matches_quadrature(rng, backend, h):
    est = make_spline(rng, k=9, omega_c=2.2)
    ref = integrate.quad(lambda w: est(w) * math.cos(w * h), 0, 2.2, limit=400,
                         epsabs=1e-13, epsrel=1e-13)[0]
    assert hhc_covariance(est, h) == pytest.approx(ref, abs=1e-8)


def test_covariance_at_zero_and_lag_points(rng):
    est = make_spline(rng, k=8, omega_c=math.pi)
    assert hhc_covariance(est, 0.0) == pytest.approx(est.variance, rel=1e-12)
    # on the grid lags the series reproduces the shrunk moments
    k = np.arange(1, 9)
    np.testing.assert_allclose(hhc_covariance(est, k.astype(float)), est.coef, atol=1e-12)


def test_flat_covariance_is_sinc():
    est = flat_spline(1.7, omega_c=2.0)
    h = np.array([0.0, 0.3, 1.0, 40.0])
    np.testing.assert_allclose(hhc_covariance(est, h), 1.7 * np.sinc(2.0 * h / math.pi),
                               rtol=1e-14, atol=1e-16)
    assert abs(hhc_covariance(est, 1e4)) < 1e-3


def test_covariance_continuous_near_poles(rng, backend):
    est = make_spline(rng, k=6, omega_c=1.0)
    for j in (1, 2, 5):
        h0 = j * math.pi  # omega_c h = j pi
        vals = hhc_covariance(est, np.array([h0 - 1e-7, h0, h0 + 1e-7]))
        assert np.ptp(vals) < 1e-6


def test_covariance_even(rng):
    est = make_spline(rng)
    h = np.linspace(0, 7, 15)
    np.testing.assert_array_equal(hhc_covariance(est, h), hhc_covariance(est, -h))


def test_empty_zero_class():
    est = SplineSpectral(LagSums([0.0, 1.0], [0, 3]), 1.0, 1.0)
    with pytest.raises(EstimationError):
        est(0.5)


def test_parameter_checks():
    with pytest.raises(ParameterError):
        SplineSpectral(HAND, math.pi, -1.0)
    with pytest.raises(ParameterError):
        SplineSpectral(HAND, 0.0, 1.0)
    with pytest.raises(ParameterError):
        select_lambda_gcv(HAND, [])


# GCV


def test_single_candidate():
    assert select_lambda_gcv(random_lag_sums(np.random.default_rng(1)), [0.37]) == 0.37


def test_gcv_direct_formula(rng):
    ls = random_lag_sums(rng)
    lam = 0.3
    n = ls.n[1:]
    y = ls.s[1:] / n
    k = np.arange(1, n.size + 1)
    w = n / (n + 2 * (k * math.pi) ** 2 * lam)
    ref = np.sum(n * ((1 - w) * y) ** 2) / (1 - w.sum() / n.size) ** 2
    assert gcv_score(ls, lam) == pytest.approx(ref, rel=1e-13)


def test_total_weight_decreases_with_lambda(rng):
    ls = random_lag_sums(rng)
    total = [shrinkage_weights(ls, lam).sum() for lam in default_lambda_grid(100)]
    assert np.all(np.diff(total) < 0)


def test_flat_covariogram_behaviour():
    # constant nonzero moments c: shrinkage is not free, the residual tends to
    # c^2 sum n_k as lambda grows and the optimum sits strictly inside the grid
    n = np.array([20, 18, 15, 12, 9])
    ls = LagSums(0.8 * n, n)
    grid = default_lambda_grid(50)
    scores = [gcv_score(ls, lam) for lam in grid]
    chosen = select_lambda_gcv(ls, grid)
    assert chosen == grid[int(np.argmin(scores))]
    assert grid[0] < chosen < grid[-1]
    assert gcv_score(ls, 1e12) == pytest.approx(0.64 * n[1:].sum(), rel=1e-9)
    # zero moments give a GCV of zero everywhere, ties go to the smallest lambda
    zero = LagSums(np.r_[5.0, np.zeros(4)], n)
    assert select_lambda_gcv(zero, grid) == grid[0]


def test_duplication_invariance(rng):
    ls = random_lag_sums(rng)
    grid = default_lambda_grid(200)
    twice = LagSums(2 * ls.s, 2 * ls.n)
    assert select_lambda_gcv(twice, 2 * grid) == pytest.approx(2 * select_lambda_gcv(ls, grid))


def test_degenerate_denominator_falls_back_to_median(caplog):
    # near-zero lambdas give w = 1 and a vanishing denominator
    ls = LagSums([1.0, 1.0, 2.0], [1, 1, 1])
    grid = np.array([1e-300, 2e-300, 3e-300])
    with caplog.at_level(logging.WARNING):
        lam = select_lambda_gcv(ls, grid)
    assert lam == 2e-300
    assert "median" in caplog.text


def test_default_lambda_grid():
    g = default_lambda_grid(250)
    assert g.size == 40
    assert g[0] == pytest.approx(1 / 250) and g[-1] == pytest.approx(250)
    assert np.allclose(np.diff(np.log(g)), np.log(g[1] / g[0]))


def test_fit_hhc_end_to_end():
    sample = simulate(CovarianceModel("matern", 1.0, 1.0, 0.5), 250, 250.0, seed=4)
    est = fit_hhc(sample)
    assert est.omega_c == pytest.approx(math.pi)
    assert est.lam in default_lambda_grid(250)
    assert est.variance == pytest.approx(np.mean(sample.values ** 2), rel=0.3)
    back = SplineSpectral.from_dict(est.to_dict())
    w = np.linspace(0, math.pi, 9)
    np.testing.assert_array_equal(back(w), est(w))
