"""Orthogonalized impulse responses, residual bootstrap bands, cumulative
screening and permutation robustness checks."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Mapping

import numpy as np

from .errors import ConfigError, DataError, NumericError
from .var import VarFit, _as_matrix, fit_var

log = logging.getLogger(__name__)

MAX_SKIP_FRACTION = 0.01


@dataclass(frozen=True)
class IrfSet:
    """Responses indexed ``[h, response, impulse]`` for h = 0..horizon."""

    horizon: int
    variable_names: tuple[str, ...]
    responses: np.ndarray
    cumulative: np.ndarray
    ci_low: np.ndarray | None = None
    ci_high: np.ndarray | None = None
    n_boot: int = 0
    skipped: int = 0

    def index(self, name: str) -> int:
        try:
            return self.variable_names.index(name)
        except ValueError:
            raise DataError(f"unknown variable {name!r}; have {list(self.variable_names)}") from None

    def pair(self, impulse: str, response: str) -> np.ndarray:
        return self.responses[:, self.index(response), self.index(impulse)]

    def rescaled(self, scales: Mapping[str, float]) -> "IrfSet":
        """Express each response variable in its own units (e.g. undo Z-scoring)."""
        s = np.array([scales.get(n, 1.0) for n in self.variable_names])[None, :, None]
        lo = None if self.ci_low is None else self.ci_low * s
        hi = None if self.ci_high is None else self.ci_high * s
        resp = self.responses * s
        return replace(self, responses=resp, cumulative=np.cumsum(resp, axis=0), ci_low=lo, ci_high=hi)

    def to_dict(self) -> dict:
        out = {
            "horizon": self.horizon,
            "variables": list(self.variable_names),
            "ordering": list(self.variable_names),
            "n_boot": self.n_boot,
            "skipped": self.skipped,
            "layout": "[h][response][impulse]",
            "responses": self.responses.tolist(),
            "cumulative": self.cumulative.tolist(),
        }
        if self.ci_low is not None:
            out["ci_low"] = self.ci_low.tolist()
            out["ci_high"] = self.ci_high.tolist()
        return out

    def tidy_rows(self) -> list[tuple]:
        """(impulse, response, h, value, lo, hi) rows for plotting."""
        rows = []
        names = self.variable_names
        for i, imp in enumerate(names):
            for j, res in enumerate(names):
                for h in range(self.horizon + 1):
                    lo = self.ci_low[h, j, i] if self.ci_low is not None else float("nan")
                    hi = self.ci_high[h, j, i] if self.ci_high is not None else float("nan")
                    rows.append((imp, res, h, float(self.responses[h, j, i]), float(lo), float(hi)))
        return rows


def ma_coefficients(phi, horizon: int) -> np.ndarray:
    """Psi_0 = I, Psi_h = sum_j phi_j Psi_{h-j}."""
    k = phi[0].shape[0]
    psi = np.zeros((horizon + 1, k, k))
    psi[0] = np.eye(k)
    for h in range(1, horizon + 1):
        for j in range(1, min(h, len(phi)) + 1):
            psi[h] += phi[j - 1] @ psi[h - j]
    return psi


def cholesky_factor(sigma: np.ndarray) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=float)
    eig = np.linalg.eigvalsh(sigma)
    if eig.min() <= 1e-12 * max(1.0, abs(eig.max())):
        raise NumericError("residual covariance is not positive definite")
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError as exc:
        raise NumericError("residual covariance is not positive definite") from exc


def _orthogonal_irf(phi, sigma, horizon: int) -> np.ndarray:
    chol = cholesky_factor(sigma)
    return ma_coefficients(phi, horizon) @ chol


def compute_irf(fit: VarFit, horizon: int = 10) -> IrfSet:
    """Point responses to one-sd orthogonalized shocks (Cholesky, panel order)."""
    if horizon < 1:
        raise ConfigError("horizon must be positive")
    resp = _orthogonal_irf(fit.phi, fit.sigma, horizon)
    return IrfSet(horizon, fit.variable_names, resp, np.cumsum(resp, axis=0))


BOOTSTRAP_STREAM = 1
PERMUTATION_STREAM = 2
BOOT_CHUNK = 128


def replicate_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    """Generator for replicate ``index`` of a stage; independent of execution order."""
    return np.random.default_rng([int(seed), int(stream), int(index)])


def _run_replicates(fn: Callable, items, threads: int) -> list:
    """Map ``fn`` over ``items`` keeping input order."""
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _collect(results: list, n: int, what: str) -> tuple[np.ndarray, int]:
    good = [r for r in results if r is not None]
    skipped = n - len(good)
    if skipped > MAX_SKIP_FRACTION * n:
        raise NumericError(f"{what}: {skipped} of {n} replicates failed (limit {MAX_SKIP_FRACTION:.0%})")
    if skipped:
        log.warning("%s: skipped %d of %d replicates", what, skipped, n)
    return np.stack(good), skipped


def bootstrap_irf(
    fit: VarFit,
    data,
    horizon: int = 10,
    n_boot: int = 10_000,
    seed: int = 0,
    threads: int = 1,
) -> IrfSet:
    """Residual-resampling bootstrap of the orthogonalized IRF with 95% bands.

    Surrogate series start from the first p observations of ``data`` and are
    rebuilt recursively from iid-resampled residual rows, then refitted.
    """
    if n_boot < 100:
        raise ConfigError(f"n_boot must be at least 100, got {n_boot}")
    y = _as_matrix(data)
    point = compute_irf(fit, horizon)
    init = y[: fit.lag]
    resid = fit.residuals
    n = resid.shape[0]

    def chunk(indices: range) -> list:
        # chunk membership depends only on the index, so results do not
        # depend on the thread count
        shocks = np.stack([resid[replicate_rng(seed, BOOTSTRAP_STREAM, b).integers(0, n, size=n)] for b in indices])
        out = []
        for surrogate in fit.simulate_many(init, shocks):
            try:
                refit = fit_var(surrogate, fit.lag)
                out.append(_orthogonal_irf(refit.phi, refit.sigma, horizon))
            except (NumericError, DataError):
                out.append(None)
        return out

    chunks = [range(s, min(s + BOOT_CHUNK, n_boot)) for s in range(0, n_boot, BOOT_CHUNK)]
    results = [r for part in _run_replicates(chunk, chunks, threads) for r in part]
    draws, skipped = _collect(results, n_boot, "bootstrap")
    lo, hi = np.percentile(draws, [2.5, 97.5], axis=0)
    # percentile bands need not contain a biased point estimate; widen to keep it inside
    lo = np.minimum(lo, point.responses)
    hi = np.maximum(hi, point.responses)
    return replace(point, ci_low=lo, ci_high=hi, n_boot=n_boot, skipped=skipped)


def cumulative_screen(irfs: IrfSet, response_var: str, threshold: float = 0.001) -> list[tuple[str, int]]:
    """Impulses whose cumulative effect on ``response_var`` reaches ``threshold``
    and whose day-1 band excludes zero, with the sign of the day-1 response."""
    j = irfs.index(response_var)
    if irfs.ci_low is None:
        raise DataError("screening needs bootstrap confidence bands")
    picked = []
    for i, name in enumerate(irfs.variable_names):
        if i == j:
            continue
        total = irfs.cumulative[irfs.horizon, j, i]
        lo, hi = irfs.ci_low[1, j, i], irfs.ci_high[1, j, i]
        day1 = irfs.responses[1, j, i]
        if abs(total) >= threshold and (lo > 0 or hi < 0) and day1 != 0:
            picked.append((name, int(np.sign(day1))))
    return picked


def permutation_test(
    data,
    lag: int = 1,
    horizon: int = 10,
    n_perm: int = 1000,
    seed: int = 0,
    threads: int = 1,
    names=None,
) -> dict:
    """Share of independently shuffled panels whose |day-1 response| exceeds the
    observed one, per (impulse, response) pair."""
    if n_perm < 100:
        raise ConfigError(f"n_perm must be at least 100, got {n_perm}")
    y = _as_matrix(data)
    fit = fit_var(data, lag) if names is None else fit_var(y, lag, names)
    observed = np.abs(compute_irf(fit, horizon).responses[1])

    def one(b: int):
        rng = replicate_rng(seed, PERMUTATION_STREAM, b)
        shuffled = np.column_stack([rng.permutation(y[:, i]) for i in range(y.shape[1])])
        try:
            refit = fit_var(shuffled, lag)
            return np.abs(_orthogonal_irf(refit.phi, refit.sigma, 1)[1])
        except (NumericError, DataError):
            return None

    draws, skipped = _collect(_run_replicates(one, range(n_perm), threads), n_perm, "permutation")
    pvals = np.mean(draws > observed, axis=0)
    names = fit.variable_names
    pairs = [
        {"impulse": imp, "response": res, "observed_day1": float(observed[j, i]), "p": float(pvals[j, i])}
        for i, imp in enumerate(names)
        for j, res in enumerate(names)
    ]
    return {
        "n_perm": n_perm,
        "skipped": skipped,
        "lag": lag,
        "variables": list(names),
        "layout": "[response][impulse]",
        "p_values": pvals.tolist(),
        "pairs": pairs,
    }
