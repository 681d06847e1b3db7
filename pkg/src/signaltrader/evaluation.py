"""Risk-adjusted performance and distributional statistics of backtests."""

from __future__ import annotations

import itertools
import math
from typing import Mapping

import numpy as np
from scipy.stats import kstwo, norm

from .errors import DataError, NumericError
from .preprocess import stationarity_report
from .var import ljung_box

TRADING_DAYS = 365
MIN_DIAGNOSTIC_RETURNS = 20
EXACT_MAX_SIZE = 20
ZERO_VARIANCE_RTOL = 1e-12


def _capital(ledger_or_cr) -> np.ndarray:
    return np.asarray(getattr(ledger_or_cr, "cr", ledger_or_cr), dtype=float)


def daily_returns(ledger_or_cr) -> np.ndarray:
    c = _capital(ledger_or_cr)
    return (c[1:] - c[:-1]) / c[:-1]


def sharpe_from_returns(r, r_f: float = 0.0) -> tuple[float, float, float]:
    """Annualized Sharpe ratio, mean and sample sd of daily returns."""
    r = np.asarray(r, dtype=float)
    if len(r) < 2:
        raise DataError("Sharpe ratio needs at least 2 daily returns")
    mu = float(np.mean(r))
    sd = float(np.std(r, ddof=1))
    # returns equal up to rounding count as constant
    if not sd > ZERO_VARIANCE_RTOL * abs(mu):
        raise NumericError("daily returns have zero variance")
    return math.sqrt(TRADING_DAYS) * (mu - r_f) / sd, mu, sd


def sharpe(ledger, r_f: float = 0.0) -> tuple[float, float, float]:
    return sharpe_from_returns(daily_returns(ledger), r_f)


def sharpe_many(cr: np.ndarray, r_f: float = 0.0) -> np.ndarray:
    """Row-wise annualized Sharpe ratios of a traders x days capital matrix;
    NaN where returns have zero variance."""
    r = (cr[:, 1:] - cr[:, :-1]) / cr[:, :-1]
    sd = r.std(axis=1, ddof=1)
    mu = r.mean(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = math.sqrt(TRADING_DAYS) * (mu - r_f) / sd
    return np.where(sd > ZERO_VARIANCE_RTOL * np.abs(mu), out, np.nan)


def profit_distribution(ledger) -> np.ndarray:
    """Profit in percent for every possible stop date."""
    return (_capital(ledger) - 1.0) * 100.0


def _midranks(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    sorted_x = x[order]
    _, start, counts = np.unique(sorted_x, return_index=True, return_counts=True)
    for s, c in zip(start, counts):
        ranks[order[s : s + c]] = s + (c + 1) / 2.0
    return ranks, counts


def _rank_sum_distribution(doubled_ranks: np.ndarray, m: int) -> np.ndarray:
    """Number of m-subsets of the pooled sample per value of twice the rank sum."""
    total = int(doubled_ranks.sum())
    ways = np.zeros((m + 1, total + 1))
    ways[0, 0] = 1.0
    for r in doubled_ranks.astype(int):
        # iterate counts downward so each observation is used at most once
        for j in range(m, 0, -1):
            ways[j, r:] += ways[j - 1, : total + 1 - r]
    return ways[m]


def wilcoxon_rank_sum(a, b) -> tuple[float, float]:
    """Two-sided Wilcoxon rank-sum test. Returns (rank sum of ``a``, p).

    Exact enumeration of pooled (mid)ranks when the smaller sample has at most
    20 observations; tie-corrected normal approximation with continuity
    correction otherwise.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) == 0 or len(b) == 0:
        raise DataError("rank-sum test needs two nonempty samples")
    pooled = np.concatenate([a, b])
    ranks, ties = _midranks(pooled)
    w_a = float(ranks[: len(a)].sum())
    w_b = float(ranks[len(a) :].sum())

    # evaluate on a canonical sample so swapping the arguments gives the same p
    if (len(a), w_a) <= (len(b), w_b):
        m, w = len(a), w_a
    else:
        m, w = len(b), w_b
    n = len(pooled) - m

    if m <= EXACT_MAX_SIZE:
        dist = _rank_sum_distribution(2 * ranks, m)
        total = dist.sum()
        k = int(round(2 * w))
        lower = dist[: k + 1].sum() / total
        upper = dist[k:].sum() / total
        p = min(1.0, 2.0 * min(lower, upper))
    else:
        N = m + n
        mean = m * (N + 1) / 2.0
        tie_term = float(np.sum(ties.astype(float) ** 3 - ties)) / (N * (N - 1))
        var = m * n / 12.0 * ((N + 1) - tie_term)
        if var <= 0:
            return w_a, 1.0
        z = max(abs(w - mean) - 0.5, 0.0) / math.sqrt(var)
        p = min(1.0, 2.0 * float(norm.sf(z)))
    return w_a, float(p)


def kde(profits, bandwidth: float = 15.0, n_grid: int = 1024, extent: float = 6.0) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian kernel density of ``profits`` on an even grid.

    The grid spans the data range widened by ``extent`` bandwidths on both
    sides, wide enough that the trapezoid integral is 1 to within 1e-6.
    """
    x = np.asarray(profits, dtype=float)
    if len(x) == 0:
        raise DataError("KDE needs at least one value")
    if not bandwidth > 0:
        raise DataError("KDE bandwidth must be positive")
    grid = np.linspace(x.min() - extent * bandwidth, x.max() + extent * bandwidth, n_grid)
    z = (grid[:, None] - x[None, :]) / bandwidth
    density = np.exp(-0.5 * z**2).sum(axis=1) / (len(x) * bandwidth * math.sqrt(2 * math.pi))
    return grid, density


def ks_statistic(sample, cdf) -> float:
    """Two-sided Kolmogorov-Smirnov distance between ``sample`` and ``cdf``."""
    x = np.asarray(sample, dtype=float)
    n = len(x)
    # tied observations form one ECDF step
    u, counts = np.unique(x, return_counts=True)
    above = np.cumsum(counts) / n
    below = above - counts / n
    f = np.asarray(cdf(u), dtype=float)
    return float(max(np.max(above - f), np.max(f - below)))


def lognormal_fit(x) -> tuple[float, float]:
    """MLE (mu, sigma) of a lognormal: moments of log(x) with 1/n variance."""
    logs = np.log(np.asarray(x, dtype=float))
    mu = float(np.mean(logs))
    return mu, float(np.sqrt(np.mean((logs - mu) ** 2)))


def return_diagnostics(ledger, max_lag: int = 10) -> dict:
    """Lognormal fit + KS test of 1+R, Ljung-Box and stationarity of R.

    The KS p-value ignores that parameters were fitted on the same data and is
    therefore anti-conservative.
    """
    r = daily_returns(ledger)
    if len(r) < MIN_DIAGNOSTIC_RETURNS:
        raise DataError(f"return diagnostics need at least {MIN_DIAGNOSTIC_RETURNS} daily returns, got {len(r)}")
    gross = 1.0 + r
    shift = 0.0
    if gross.min() <= 0:
        shift = 1e-9 - float(gross.min())
        gross = gross + shift
    out: dict = {"n": int(len(r)), "shift": shift}
    if np.ptp(r) == 0:
        out.update(lognormal=None, ljung_box=None, stationarity=None, note="constant daily returns")
        return out
    mu, sigma = lognormal_fit(gross)
    d = ks_statistic(gross, lambda v: norm.cdf((np.log(v) - mu) / sigma))
    out["lognormal"] = {
        "mu": mu,
        "sigma": sigma,
        "ks_stat": d,
        "ks_p": float(kstwo.sf(d, len(gross))),
        "note": "KS p-value not corrected for parameter estimation (anti-conservative)",
    }
    q, p = ljung_box(r, min(max_lag, len(r) - 1))
    out["ljung_box"] = {"lags": min(max_lag, len(r) - 1), "stat": q, "p": p}
    rep = stationarity_report(r, name="daily_returns")
    out["stationarity"] = rep.to_dict()
    return out


def evaluate(
    ledgers: Mapping[str, object],
    r_f: float = 0.0,
    bandwidth: float = 15.0,
    diagnostics_for: tuple[str, ...] = (),
) -> dict:
    """Per-strategy Sharpe ratios, profit distributions and pairwise rank-sum tests."""
    strategies = {}
    for name, ledger in ledgers.items():
        row: dict = {"final_profit_pct": float(profit_distribution(ledger)[-1])}
        try:
            sr, mu, sd = sharpe(ledger, r_f)
            row.update(sharpe_annualized=sr, mean_daily_return=mu, sd_daily_return=sd)
        except NumericError:
            row.update(sharpe_annualized=None, mean_daily_return=0.0, sd_daily_return=0.0)
        row["profit_distribution"] = profit_distribution(ledger).tolist()
        if name in diagnostics_for:
            row["diagnostics"] = return_diagnostics(ledger)
        strategies[name] = row
    pairs = {}
    for x, y in itertools.combinations(ledgers, 2):
        w, p = wilcoxon_rank_sum(profit_distribution(ledgers[x]), profit_distribution(ledgers[y]))
        pairs[f"{x} vs {y}"] = {"a": x, "b": y, "statistic": w, "p": p}
    return {"r_f": r_f, "kde_bandwidth_pct": bandwidth, "strategies": strategies, "pairwise_wilcoxon": pairs}


def table_rows(report: dict) -> list[tuple[str, float | None, float]]:
    """(strategy, annualized SR, mean daily return in percent per day)."""
    rows = []
    for name, row in report["strategies"].items():
        rows.append((name, row["sharpe_annualized"], row["mean_daily_return"] * 100.0))
    return rows
