import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from statsmodels.tsa.api import VAR

from signaltrader.errors import DataError, NumericError
from signaltrader.signals import Panel
from signaltrader.synthetic import simulate_var
from signaltrader.var import bic, fit_var, ljung_box, residual_diagnostics, select_lag

PHI1 = np.array([[0.5, 0.1], [0.0, 0.3]])
PHI2 = (np.array([[0.3, 0.0], [0.1, 0.2]]), np.array([[0.3, 0.0], [0.0, 0.25]]))


def test_recovers_var1():
    y = simulate_var([PHI1], 5000, np.random.default_rng(1))
    fit = fit_var(y, 1)
    assert np.max(np.abs(fit.phi[0] - PHI1)) < 0.05
    assert np.max(np.abs(fit.sigma - np.eye(2))) < 0.05


def test_white_noise_gives_near_zero_phi():
    fit = fit_var(np.random.default_rng(2).standard_normal((5000, 3)), 1)
    assert np.max(np.abs(fit.phi[0])) < 0.05


@pytest.mark.parametrize("lag", [1, 2, 3])
def test_matches_statsmodels(lag):
    rng = np.random.default_rng(lag)
    y = simulate_var(PHI2, 400, rng) + 0.01 * np.arange(400)[:, None]
    ours = fit_var(y, lag)
    ref = VAR(y).fit(lag, trend="ct")
    k = y.shape[1]
    # statsmodels rows: const, trend, then lag blocks
    for j in range(lag):
        np.testing.assert_allclose(ours.phi[j], ref.params[2 + j * k : 2 + (j + 1) * k].T, rtol=1e-8, atol=1e-10)
    np.testing.assert_allclose(ours.trend, ref.params[1], rtol=1e-8, atol=1e-12)
    np.testing.assert_allclose(ours.residuals, ref.resid, atol=1e-10)
    np.testing.assert_allclose(ours.sigma, ref.sigma_u, rtol=1e-9)


def test_ar1_closed_form_slope():
    rng = np.random.default_rng(3)
    x = np.zeros(200)
    for t in range(1, 200):
        x[t] = 0.6 * x[t - 1] + rng.standard_normal()
    # regress x_t on [x_{t-1}, t, 1]: partial out (t, 1) from both sides, then slope
    t = np.arange(1, 200, dtype=float)
    Z = np.column_stack([t, np.ones(199)])
    proj = Z @ np.linalg.pinv(Z)
    yt = x[1:] - proj @ x[1:]
    xt = x[:-1] - proj @ x[:-1]
    slope = float(xt @ yt / (xt @ xt))
    assert fit_var(x[:, None], 1).phi[0][0, 0] == pytest.approx(slope, rel=1e-10)


def test_invariants_and_reconstruction():
    y = simulate_var(PHI2, 800, np.random.default_rng(4))
    fit = fit_var(y, 2)
    assert fit.nobs == len(y) - 2
    assert np.max(np.abs(fit.residuals.mean(axis=0))) <= 1e-10
    np.testing.assert_array_equal(fit.sigma, fit.sigma.T)
    assert np.linalg.eigvalsh(fit.sigma).min() >= 0
    np.testing.assert_allclose(fit.fitted_values(y) + fit.residuals, y[2:], atol=1e-12)
    again = fit_var(y, 2)
    assert all(np.array_equal(a, b) for a, b in zip(fit.phi, again.phi))
    np.testing.assert_array_equal(fit.sigma, again.sigma)


def test_simulate_with_own_residuals_reproduces_data():
    y = simulate_var([PHI1], 300, np.random.default_rng(5))
    fit = fit_var(y, 1)
    np.testing.assert_allclose(fit.simulate(y[:1], fit.residuals), y, atol=1e-10)


def test_constant_column_is_rank_deficient():
    y = np.random.default_rng(0).standard_normal((100, 2))
    y[:, 1] = 3.0
    with pytest.raises(NumericError):
        fit_var(y, 1)


def test_insufficient_data():
    with pytest.raises(DataError):
        fit_var(np.zeros((5, 3)), 2)


def test_names_from_panel():
    p = Panel.from_array(np.random.default_rng(0).standard_normal((50, 2)), ["returns", "x"])
    assert fit_var(p).variable_names == ("returns", "x")


def test_bic_selects_true_lag():
    hits1 = hits2 = 0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        hits1 += select_lag(simulate_var([PHI1], 5000, rng), 4)[0] == 1
        hits2 += select_lag(simulate_var(PHI2, 5000, rng), 4)[0] == 2
    assert hits1 >= 9 and hits2 >= 9


def test_select_lag_bounds():
    with pytest.raises(DataError, match="too large"):
        select_lag(np.zeros((20, 2)), 6)


def test_select_lag_scores_use_common_sample():
    y = simulate_var(PHI2, 500, np.random.default_rng(8))
    _, scores = select_lag(y, 3)
    assert scores[2] == bic(fit_var(y[1:], 2))


def test_ljung_box_matches_statsmodels():
    from statsmodels.stats.diagnostic import acorr_ljungbox

    x = np.random.default_rng(9).standard_normal(300)
    q, p = ljung_box(x, 10)
    ref = acorr_ljungbox(x, lags=[10])
    assert q == pytest.approx(float(ref["lb_stat"].iloc[0]), rel=1e-10)
    assert p == pytest.approx(float(ref["lb_pvalue"].iloc[0]), rel=1e-8)


def test_residual_diagnostics_detects_misspecification():
    detected = 0
    for seed in range(10):
        y = simulate_var([np.diag([0.2, 0.2]), np.diag([0.6, 0.5])], 1000, np.random.default_rng(seed))
        d = residual_diagnostics(fit_var(y, 1))
        detected += min(v["p"] for v in d["ljung_box"].values()) < 0.05
    assert detected >= 6


def test_residual_diagnostics_well_specified_rejection_rate():
    rejected = sum(
        residual_diagnostics(fit_var(simulate_var([PHI1], 500, np.random.default_rng(s)), 1))["ljung_box"]["y0"]["p"]
        < 0.05
        for s in range(100)
    )
    assert rejected <= 15


def test_zero_residuals_give_zero_statistics():
    fit = fit_var(simulate_var([PHI1], 100, np.random.default_rng(0)), 1)
    from dataclasses import replace

    d = residual_diagnostics(replace(fit, residuals=np.zeros_like(fit.residuals)))
    assert all(v["stat"] == 0.0 for v in d["ljung_box"].values())
    assert np.all(np.asarray(d["residual_correlation"]) == 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 3))
def test_residual_column_means_vanish(seed, lag):
    y = np.random.default_rng(seed).standard_normal((60, 3)).cumsum(axis=0)
    try:
        fit = fit_var(y, lag)
    except NumericError:
        return
    assert np.max(np.abs(fit.residuals.mean(axis=0))) <= 1e-10 * max(1.0, np.abs(y).max())
