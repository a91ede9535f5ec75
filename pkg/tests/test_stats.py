"""Diagnostics: OLS core, distribution tails, ADF, JB, ARCH effect, Granger."""
import math

import numpy as np
import pytest

from microstrat.errors import DataError
from microstrat.stats import (
    adf_critical_values,
    adf_test,
    arch_effect_test,
    chi2_sf,
    f_sf,
    granger_test,
    jarque_bera,
    ols,
)


def simulate_garch(omega, alpha, beta, n, rng):
    z = rng.standard_normal(n)
    h = omega / (1.0 - alpha - beta)
    eps = np.empty(n)
    for t in range(n):
        if t > 0:
            h = omega + alpha * eps[t - 1] ** 2 + beta * h
        eps[t] = z[t] * math.sqrt(h)
    return eps


# ---------------------------------------------------------------------------
# OLS
# ---------------------------------------------------------------------------


def test_ols_exact_fit():
    x = np.arange(1.0, 11.0)
    fit = ols(x[:, None], 2.0 * x)
    assert fit.coefficients[0] == pytest.approx(2.0, abs=1e-12)
    np.testing.assert_allclose(fit.residuals, 0.0, atol=1e-12)


def test_ols_intercept_only_recovers_mean():
    y = np.array([1.0, 2.0, 4.0, 9.0])
    fit = ols(np.ones((4, 1)), y)
    assert fit.coefficients[0] == pytest.approx(y.mean(), abs=1e-12)


def test_ols_recovers_noisy_line_within_three_se():
    rng = np.random.default_rng(42)
    x = rng.standard_normal(500)
    y = 1.0 + 3.0 * x + 0.5 * rng.standard_normal(500)
    fit = ols(np.column_stack([np.ones(500), x]), y)
    for est, se, truth in zip(fit.coefficients, fit.standard_errors, (1.0, 3.0)):
        assert abs(est - truth) < 3.0 * se
    assert 0.0 <= fit.r_squared <= 1.0


def test_ols_residuals_orthogonal_to_regressors():
    rng = np.random.default_rng(7)
    for _ in range(20):
        X = rng.standard_normal((200, 4))
        y = rng.standard_normal(200)
        fit = ols(X, y)
        for j in range(4):
            num = abs(float(X[:, j] @ fit.residuals))
            scale = np.linalg.norm(X[:, j]) * np.linalg.norm(fit.residuals) + 1e-300
            assert num / scale < 1e-8


def test_ols_rejects_bad_designs():
    x = np.arange(5.0)
    with pytest.raises(DataError, match="rank"):
        ols(np.column_stack([x, 2.0 * x]), x)
    with pytest.raises(DataError):
        ols(np.ones((3, 4)), np.ones(3))


# ---------------------------------------------------------------------------
# Distribution tails (analytic closed forms at published quantiles)
# ---------------------------------------------------------------------------


def test_chi2_sf_published_quantiles():
    # df=2 tail is exp(-x/2), so the 5% point is -2 ln 0.05
    assert chi2_sf(-2.0 * math.log(0.05), 2) == pytest.approx(0.05, abs=1e-12)
    assert chi2_sf(3.841458820694124, 1) == pytest.approx(0.05, abs=1e-8)
    assert chi2_sf(9.487729036781154, 4) == pytest.approx(0.05, abs=1e-8)


def test_chi2_sf_matches_closed_forms():
    for x in (0.1, 0.5, 1.0, 2.5, 7.0, 20.0):
        assert chi2_sf(x, 2) == pytest.approx(math.exp(-x / 2.0), abs=1e-14)
        assert chi2_sf(x, 4) == pytest.approx(
            math.exp(-x / 2.0) * (1.0 + x / 2.0), abs=1e-13)


def test_f_sf_published_quantiles():
    # F(2,2) has cdf x/(1+x): the 5% tail point is exactly 19
    assert f_sf(19.0, 2, 2) == pytest.approx(0.05, abs=1e-12)
    # F(2,10): sf = (1 + x/5)^-5, 5% point is 5 (20^(1/5) - 1)
    assert f_sf(4.102821015130401, 2, 10) == pytest.approx(0.05, abs=1e-10)


def test_f_sf_matches_closed_form_for_two_numerator_df():
    for x in (0.3, 1.0, 2.0, 6.0):
        for d2 in (4, 8, 30):
            assert f_sf(x, 2, d2) == pytest.approx(
                (1.0 + 2.0 * x / d2) ** (-d2 / 2.0), abs=1e-12)


def test_tails_are_probabilities():
    assert chi2_sf(-1.0, 3) == 1.0
    assert f_sf(-0.5, 2, 7) == 1.0
    assert f_sf(math.inf, 2, 7) == 0.0
    for x in (0.01, 1.0, 10.0, 100.0):
        assert 0.0 <= chi2_sf(x, 5) <= 1.0
        assert 0.0 <= f_sf(x, 3, 9) <= 1.0


# ---------------------------------------------------------------------------
# Jarque-Bera
# ---------------------------------------------------------------------------


def test_jarque_bera_zero_for_exact_normal_moments():
    # symmetric, and kurtosis N/(2 n_nonzero) = 12/4 = 3 exactly
    x = np.array([1.0, 1.0, -1.0, -1.0] + [0.0] * 8)
    res = jarque_bera(x)
    assert res.statistic == pytest.approx(0.0, abs=1e-12)
    assert res.p_value == pytest.approx(1.0, abs=1e-12)
    assert not res.reject_at_5pct


def test_jarque_bera_size_on_gaussian():
    rng = np.random.default_rng(1)
    rejections = 0
    for _ in range(1000):
        if jarque_bera(rng.standard_normal(10_000)).p_value < 0.05:
            rejections += 1
    assert 0.04 <= rejections / 1000.0 <= 0.065


def test_jarque_bera_rejects_heavy_tails():
    rng = np.random.default_rng(2)
    for _ in range(5):
        assert jarque_bera(rng.standard_t(3, 5000)).p_value < 0.01


def test_jarque_bera_degenerate_inputs():
    with pytest.raises(DataError):
        jarque_bera(np.ones(20))
    with pytest.raises(DataError):
        jarque_bera(np.array([1.0, 2.0]))


# ---------------------------------------------------------------------------
# ADF
# ---------------------------------------------------------------------------


def test_adf_critical_values_match_published_table():
    cvs = adf_critical_values(1_000_000)
    assert cvs["1%"] == pytest.approx(-3.430328, abs=1e-3)
    assert cvs["5%"] == pytest.approx(-2.861415, abs=1e-3)
    assert cvs["10%"] == pytest.approx(-2.566744, abs=1e-3)


def test_adf_rejects_white_noise():
    rng = np.random.default_rng(3)
    for _ in range(30):
        res = adf_test(rng.standard_normal(5000), max_lag=8)
        assert res.p_value < 0.01
        assert res.statistic < res.critical_values["1%"]


def test_adf_keeps_unit_root_in_random_walk():
    rng = np.random.default_rng(4)
    kept = sum(
        not adf_test(np.cumsum(rng.standard_normal(5000)), max_lag=8).reject_at_5pct
        for _ in range(30))
    assert kept >= 27


def test_adf_fixed_lag_is_honoured():
    rng = np.random.default_rng(5)
    res = adf_test(rng.standard_normal(500), max_lag=6, selection="fixed")
    assert res.lag == 6


def test_adf_sic_picks_up_short_memory():
    # differences follow AR(1) with phi=0.5, so at least one lag is needed
    rng = np.random.default_rng(6)
    hits = 0
    for _ in range(10):
        e = rng.standard_normal(3000)
        d = np.empty(3000)
        d[0] = e[0]
        for t in range(1, 3000):
            d[t] = 0.5 * d[t - 1] + e[t]
        res = adf_test(np.cumsum(d), max_lag=6, selection="sic")
        hits += res.lag >= 1
    assert hits >= 8


def test_adf_rejection_survives_doubling_the_sample():
    rng = np.random.default_rng(8)
    stable = 0
    for _ in range(20):
        x = rng.standard_normal(5000)
        first = adf_test(x[:2500], max_lag=6)
        second = adf_test(x, max_lag=6)
        if not (first.p_value < 0.01 and second.p_value > 0.05):
            stable += 1
    assert stable >= 19


def test_adf_rejects_constant_series():
    with pytest.raises(DataError):
        adf_test(np.full(100, 3.0))


# ---------------------------------------------------------------------------
# ARCH effect
# ---------------------------------------------------------------------------


def test_arch_effect_size_on_iid_gaussian():
    rng = np.random.default_rng(9)
    rejections = sum(
        arch_effect_test(rng.standard_normal(2000), lags=12).reject_at_5pct
        for _ in range(300))
    assert 0.02 <= rejections / 300.0 <= 0.09


def test_arch_effect_detects_volatility_clustering():
    rng = np.random.default_rng(10)
    for _ in range(5):
        eps = simulate_garch(1e-6, 0.3, 0.6, 5000, rng)
        assert arch_effect_test(eps, lags=12).p_value < 0.01


def test_arch_effect_rejects_constant_series():
    with pytest.raises(DataError):
        arch_effect_test(np.ones(100), lags=4)


# ---------------------------------------------------------------------------
# Granger
# ---------------------------------------------------------------------------


def test_granger_finds_the_planted_direction():
    rng = np.random.default_rng(11)
    forward_hits = 0
    reverse_clean = 0
    for _ in range(20):
        x = rng.standard_normal(2000)
        y = np.empty(2000)
        y[0] = rng.standard_normal()
        y[1:] = 0.8 * x[:-1] + rng.standard_normal(1999)
        res = granger_test(x, y, lag=2)
        forward_hits += res.x_causes_y.p_value < 0.01
        reverse_clean += res.y_causes_x.p_value > 0.05
    assert forward_hits == 20
    assert reverse_clean >= 18


def test_granger_size_on_independent_noise():
    # n=500 per trial; shorter samples run visibly under the nominal level
    rng = np.random.default_rng(12)
    rejections = 0
    trials = 400
    for _ in range(trials):
        res = granger_test(rng.standard_normal(500), rng.standard_normal(500), lag=2)
        rejections += res.x_causes_y.reject_at_5pct
    assert 0.03 <= rejections / trials <= 0.075


def test_granger_swapping_inputs_swaps_directions():
    rng = np.random.default_rng(13)
    x = rng.standard_normal(300)
    y = rng.standard_normal(300)
    a = granger_test(x, y, lag=3)
    b = granger_test(y, x, lag=3)
    assert a.x_causes_y.statistic == b.y_causes_x.statistic
    assert a.x_causes_y.p_value == b.y_causes_x.p_value
    assert a.y_causes_x.statistic == b.x_causes_y.statistic


def test_granger_input_validation():
    with pytest.raises(DataError):
        granger_test(np.ones(50), np.ones(40), lag=2)
    with pytest.raises(DataError):
        granger_test(np.ones(12), np.ones(12), lag=2)
