"""Stationarity tests (ADF, KPSS), differencing and Z-scoring."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import norm

from .errors import DataError, NumericError
from .signals import Signal

MIN_TEST_LENGTH = 20

# MacKinnon (1994) response surface, constant-only regression, one variable.
_TAU_MAX = 2.74
_TAU_MIN = -18.83
_TAU_STAR = -1.61
_TAU_SMALLP = (2.1659, 1.4412, 0.038269)
_TAU_LARGEP = (1.7339, 0.93202, -0.12745, -0.010368)

# Level-stationarity KPSS critical values (Kwiatkowski et al. 1992, table 1).
_KPSS_CRIT = np.array([0.347, 0.463, 0.574, 0.739])
_KPSS_PVALS = np.array([0.10, 0.05, 0.025, 0.01])

ADF_ALPHA = 0.05
KPSS_ALPHA = 0.10


@dataclass(frozen=True)
class StationarityReport:
    signal_name: str
    adf_stat: float
    adf_p: float
    kpss_stat: float
    kpss_p: float
    verdict: str
    differences_applied: int
    adf_lag: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ZParams:
    mean: float
    sd: float
    fitted_on: tuple[str, str]

    def to_dict(self) -> dict:
        return {"mean": self.mean, "sd": self.sd, "fitted_on": list(self.fitted_on)}


def _values(x) -> np.ndarray:
    return np.asarray(x.values if isinstance(x, Signal) else x, dtype=float)


def _ols(y: np.ndarray, X: np.ndarray):
    """Least squares through QR. Returns (beta, ssr, diag((X'X)^-1))."""
    q, r = np.linalg.qr(X)
    if np.any(np.abs(np.diag(r)) <= 1e-12 * max(1.0, np.abs(r).max())):
        raise NumericError("regressor matrix is rank deficient")
    beta = np.linalg.solve(r, q.T @ y)
    resid = y - X @ beta
    rinv = np.linalg.solve(r, np.eye(r.shape[0]))
    return beta, float(resid @ resid), np.sum(rinv**2, axis=1)


def _adf_design(x: np.ndarray, lags: int, nobs: int | None = None):
    """Regression of dx_t on [x_{t-1}, dx_{t-1..t-lags}, 1] over the last nobs rows."""
    dx = np.diff(x)
    n = len(dx) - lags if nobs is None else nobs
    cols = [x[-n - 1 : -1]]
    cols += [dx[-n - j : len(dx) - j] for j in range(1, lags + 1)]
    cols.append(np.ones(n))
    return dx[-n:], np.column_stack(cols)


def mackinnon_p(stat: float) -> float:
    if stat > _TAU_MAX:
        return 1.0
    if stat < _TAU_MIN:
        return 0.0
    coef = _TAU_SMALLP if stat <= _TAU_STAR else _TAU_LARGEP
    return float(norm.cdf(np.polynomial.polynomial.polyval(stat, coef)))


def default_adf_max_lag(n: int) -> int:
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


def adf_test(x, max_lag: int | None = None) -> tuple[float, float, int]:
    """Augmented Dickey-Fuller test with constant, lag chosen by AIC.

    Null hypothesis: unit root. Returns ``(stat, p_value, used_lag)``.
    """
    x = _values(x)
    n = len(x)
    if n < MIN_TEST_LENGTH:
        raise DataError(f"ADF needs at least {MIN_TEST_LENGTH} observations, got {n}")
    if np.ptp(x) == 0:
        raise NumericError("ADF undefined for a constant series")
    if max_lag is None:
        max_lag = default_adf_max_lag(n)
    max_lag = max(0, min(max_lag, n // 2 - 2))

    # all candidate lags share the sample of the longest one so AICs compare
    nobs = n - 1 - max_lag
    best_aic, best_lag = math.inf, 0
    for lag in range(max_lag + 1):
        y, X = _adf_design(x, lag, nobs)
        _, ssr, _ = _ols(y, X)
        llf = -nobs / 2.0 * (math.log(2 * math.pi) + math.log(ssr / nobs) + 1.0)
        aic = -2.0 * llf + 2.0 * X.shape[1]
        if aic < best_aic:
            best_aic, best_lag = aic, lag

    y, X = _adf_design(x, best_lag)
    beta, ssr, xtx_diag = _ols(y, X)
    dof = len(y) - X.shape[1]
    stat = float(beta[0] / math.sqrt(ssr / dof * xtx_diag[0]))
    return stat, mackinnon_p(stat), best_lag


def kpss_bandwidth(n: int) -> int:
    return int(math.floor(4.0 * (n / 100.0) ** 0.25))


def kpss_test(x, lags: int | None = None) -> tuple[float, float]:
    """KPSS level-stationarity test with a Bartlett-weighted long-run variance.

    The p-value is interpolated from the critical-value table and clamped to
    [0.01, 0.1].
    """
    x = _values(x)
    n = len(x)
    if n < MIN_TEST_LENGTH:
        raise DataError(f"KPSS needs at least {MIN_TEST_LENGTH} observations, got {n}")
    if lags is None:
        lags = kpss_bandwidth(n)
    lags = min(lags, n - 1)
    e = x - x.mean()
    s2 = float(e @ e)
    if s2 == 0.0:
        return 0.0, float(_KPSS_PVALS[0])
    for lag in range(1, lags + 1):
        s2 += 2.0 * (1.0 - lag / (lags + 1.0)) * float(e[lag:] @ e[:-lag])
    s2 /= n
    eta = float(np.sum(np.cumsum(e) ** 2)) / n**2
    stat = eta / s2
    p = float(np.interp(stat, _KPSS_CRIT, _KPSS_PVALS))
    return stat, p


def verdict(adf_p: float, kpss_p: float) -> str:
    # kpss_p is clamped at 0.1, so "above 0.1" means the statistic sits below
    # the 10% critical value
    adf_ok = adf_p < ADF_ALPHA
    kpss_ok = kpss_p >= KPSS_ALPHA
    if adf_ok and kpss_ok:
        return "stationary"
    if not adf_ok and not kpss_ok:
        return "non_stationary"
    return "ambiguous"


def stationarity_report(x, differences_applied: int = 0, name: str | None = None) -> StationarityReport:
    adf_stat, adf_p, lag = adf_test(x)
    kpss_stat, kpss_p = kpss_test(x)
    name = name or (x.name if isinstance(x, Signal) else "x")
    return StationarityReport(
        name, adf_stat, adf_p, kpss_stat, kpss_p, verdict(adf_p, kpss_p), differences_applied, lag
    )


def difference(x: Signal, order: int = 1) -> Signal:
    if order < 1:
        raise DataError("difference order must be positive")
    if len(x) <= order:
        raise DataError(f"{x.name}: length {len(x)} too short for {order} difference(s)")
    out = x
    for _ in range(order):
        out = out.with_values(out.dates[1:], np.diff(out.values), transform="difference")
    return out


def auto_stationarize(x: Signal, max_diff_order: int = 2) -> tuple[Signal, StationarityReport]:
    """Difference ``x`` until both tests agree it is stationary."""
    current = x
    for d in range(max_diff_order + 1):
        report = stationarity_report(current, d, x.name)
        if report.verdict == "stationary":
            return current, report
        if d < max_diff_order:
            current = difference(current, 1)
    raise NumericError(
        f"{x.name}: not stationary after {max_diff_order} difference(s) "
        f"(adf_p={report.adf_p:.4g}, kpss_p={report.kpss_p:.4g})"
    )


def z_transform(x: Signal, fit_range=None) -> tuple[Signal, ZParams]:
    """Standardize with mean and sample sd fitted on ``fit_range`` only.

    ``fit_range`` is an inclusive ``(start, end)`` pair of dates; either end may
    be None. The fitted parameters are applied to the whole series.
    """
    start, end = fit_range if fit_range is not None else (None, None)
    fitted = x.between(start, end)
    if len(fitted) < 2:
        raise DataError(f"{x.name}: need at least 2 points in the fit range")
    mean = float(np.mean(fitted.values))
    sd = float(np.std(fitted.values, ddof=1))
    if not sd > 0:
        raise NumericError(f"{x.name}: zero variance over the fit range")
    z = (x.values - mean) / sd
    params = ZParams(mean, sd, (str(fitted.dates[0]), str(fitted.dates[-1])))
    return x.with_values(x.dates, z, transform="z"), params


def apply_z(x: Signal, params: ZParams) -> Signal:
    return x.with_values(x.dates, (x.values - params.mean) / params.sd, transform="z")
