"""Vector autoregression with linear trend and intercept, fitted by OLS."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import chi2

from .errors import DataError, NumericError
from .signals import Panel


@dataclass(frozen=True)
class VarFit:
    """Fitted VAR(p): y_t = sum_j phi[j] y_{t-j} + trend * t + intercept + e_t.

    ``phi[j][a, b]`` is the weight of variable b at lag j+1 in the equation of
    variable a. The trend index t is 1 at the first effective observation.
    """

    phi: tuple[np.ndarray, ...]
    trend: np.ndarray
    intercept: np.ndarray
    residuals: np.ndarray
    sigma: np.ndarray
    lag: int
    variable_names: tuple[str, ...]

    @property
    def k(self) -> int:
        return len(self.variable_names)

    @property
    def nobs(self) -> int:
        return self.residuals.shape[0]

    @property
    def sigma_ml(self) -> np.ndarray:
        return self.residuals.T @ self.residuals / self.nobs

    def fitted_values(self, data) -> np.ndarray:
        """One-step predictions over the effective sample of ``data``."""
        y = _as_matrix(data)
        X = _design(y, self.lag)
        return X @ self.coefficients()

    def coefficients(self) -> np.ndarray:
        """Stacked (k*p + 2) x k coefficient matrix matching the design layout."""
        return np.vstack([p.T for p in self.phi] + [self.trend[None, :], self.intercept[None, :]])

    def simulate(self, init: np.ndarray, shocks: np.ndarray) -> np.ndarray:
        """Run the fitted recursion forward.

        ``init`` holds the first p rows, ``shocks`` one row per later step. The
        returned series has ``p + len(shocks)`` rows.
        """
        return self.simulate_many(init, np.asarray(shocks)[None])[0]

    def simulate_many(self, init: np.ndarray, shocks: np.ndarray) -> np.ndarray:
        """Batched ``simulate``: ``shocks`` is (B, n, k); returns (B, p + n, k)."""
        p, k = self.lag, self.k
        B, n, _ = shocks.shape
        y = np.empty((B, p + n, k))
        y[:, :p] = init
        stacked_t = np.hstack(self.phi).T  # kp x k
        for i in range(n):
            t = p + i
            lags = y[:, t - p : t][:, ::-1].reshape(B, k * p)
            y[:, t] = lags @ stacked_t + self.trend * (i + 1) + self.intercept + shocks[:, i]
        return y

    def to_dict(self, include_residuals: bool = False) -> dict:
        names = list(self.variable_names)
        out = {
            "variables": names,
            "lag": self.lag,
            "nobs": self.nobs,
            "phi": [{"lag": j + 1, "matrix": p.tolist()} for j, p in enumerate(self.phi)],
            "trend": dict(zip(names, self.trend.tolist())),
            "intercept": dict(zip(names, self.intercept.tolist())),
            "sigma": self.sigma.tolist(),
        }
        if include_residuals:
            out["residuals"] = self.residuals.tolist()
        return out


def _as_matrix(data) -> np.ndarray:
    if isinstance(data, Panel):
        return np.asarray(data.values, dtype=float)
    y = np.asarray(data, dtype=float)
    if y.ndim != 2:
        raise DataError("VAR input must be a T x k matrix")
    return y


def _names(data, k: int) -> tuple[str, ...]:
    if isinstance(data, Panel):
        return data.names
    return tuple(f"y{i}" for i in range(k))


def _design(y: np.ndarray, p: int) -> np.ndarray:
    T, k = y.shape
    n = T - p
    cols = [y[p - j : T - j] for j in range(1, p + 1)]
    cols.append(np.arange(1, n + 1, dtype=float)[:, None])
    cols.append(np.ones((n, 1)))
    return np.hstack(cols)


def fit_var(data, lag: int = 1, names: Sequence[str] | None = None) -> VarFit:
    """Equation-by-equation OLS (solved jointly through one QR factorization)."""
    if lag < 1:
        raise DataError("VAR lag must be positive")
    y = _as_matrix(data)
    T, k = y.shape
    n_params = k * lag + 2
    if T - lag <= n_params:
        raise DataError(f"insufficient data for VAR({lag}) with {k} variables: T={T}")
    X = _design(y, lag)
    Y = y[lag:]
    q, r = np.linalg.qr(X)
    diag = np.abs(np.diag(r))
    if np.any(diag <= 1e-10 * diag.max()):
        raise NumericError("VAR regressors are collinear (rank deficient)")
    B = np.linalg.solve(r, q.T @ Y)
    resid = Y - X @ B
    sigma = resid.T @ resid / (T - lag - n_params)
    sigma = (sigma + sigma.T) / 2
    phi = tuple(np.ascontiguousarray(B[j * k : (j + 1) * k].T) for j in range(lag))
    return VarFit(
        phi=phi,
        trend=B[k * lag].copy(),
        intercept=B[k * lag + 1].copy(),
        residuals=resid,
        sigma=sigma,
        lag=lag,
        variable_names=tuple(names) if names is not None else _names(data, k),
    )


def bic(fit: VarFit) -> float:
    n = fit.nobs
    sign, logdet = np.linalg.slogdet(fit.sigma_ml)
    if sign <= 0:
        raise NumericError("ML residual covariance is singular")
    n_params = (fit.k * fit.lag + 2) * fit.k
    return float(logdet + n_params * math.log(n) / n)


def select_lag(data, max_lag: int = 8) -> tuple[int, dict[int, float]]:
    """Pick the lag in 1..max_lag minimizing BIC on a common effective sample."""
    if max_lag < 1:
        raise DataError("max_lag must be at least 1")
    y = _as_matrix(data)
    T, k = y.shape
    if max_lag > T / (2 * k):
        raise DataError(f"max_lag={max_lag} too large for T={T}, k={k}")
    scores = {}
    for p in range(1, max_lag + 1):
        scores[p] = bic(fit_var(y[max_lag - p :], p))
    best = min(scores, key=lambda p: (scores[p], p))
    return best, scores


def ljung_box(x, lags: int) -> tuple[float, float]:
    """Ljung-Box portmanteau statistic over ``lags`` autocorrelations."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if lags < 1 or lags >= n:
        raise DataError(f"Ljung-Box lags must be in [1, {n - 1}]")
    e = x - x.mean()
    denom = float(e @ e)
    if denom == 0.0:
        return 0.0, 1.0
    acf = np.array([float(e[h:] @ e[:-h]) / denom for h in range(1, lags + 1)])
    q = n * (n + 2) * float(np.sum(acf**2 / (n - np.arange(1, lags + 1))))
    return q, float(chi2.sf(q, lags))


def residual_diagnostics(fit: VarFit, max_autocorr_lag: int = 10) -> dict:
    """Per-equation Ljung-Box tests and the cross-equation residual correlations."""
    e = fit.residuals
    lb = {}
    for i, name in enumerate(fit.variable_names):
        q, p = ljung_box(e[:, i], max_autocorr_lag)
        lb[name] = {"stat": q, "p": p}
    sd = e.std(axis=0)
    cov = np.cov(e, rowvar=False, ddof=0) if e.shape[0] > 1 else np.zeros((fit.k, fit.k))
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = cov / np.outer(sd, sd)
    corr = np.where(np.outer(sd, sd) > 0, corr, 0.0)
    return {
        "max_lag": max_autocorr_lag,
        "ljung_box": lb,
        "residual_correlation": np.atleast_2d(corr).tolist(),
        "variables": list(fit.variable_names),
    }
