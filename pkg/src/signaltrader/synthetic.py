"""Synthetic data generators for tests, experiments and demos."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np

from .signals import Manifest, Signal, to_day, write_csv, write_manifest

DEFAULT_SIGNALS = ("fx_volume", "blockchain_tx", "downloads", "search", "tweets", "valence", "polarization")


def simulate_var(
    phi: Sequence[np.ndarray],
    T: int,
    rng: np.random.Generator,
    sigma: np.ndarray | None = None,
    intercept: np.ndarray | None = None,
    burn: int = 500,
) -> np.ndarray:
    """Draw T observations from a stationary VAR(p) with Gaussian shocks."""
    phi = [np.asarray(p, dtype=float) for p in phi]
    k, p = phi[0].shape[0], len(phi)
    chol = np.linalg.cholesky(sigma) if sigma is not None else np.eye(k)
    c = np.zeros(k) if intercept is None else np.asarray(intercept, dtype=float)
    shocks = rng.standard_normal((T + burn, k)) @ chol.T
    y = np.zeros((T + burn, k))
    for t in range(p, T + burn):
        y[t] = c + shocks[t]
        for j in range(p):
            y[t] += phi[j] @ y[t - 1 - j]
    return y[burn:]


def planted_lead_signals(
    seed: int,
    n_days: int = 1400,
    effect: float = 0.005,
    ret_sd: float = 0.02,
    lead: str = "polarization",
    names: Sequence[str] = DEFAULT_SIGNALS,
    start="2011-02-01",
) -> dict[str, Signal]:
    """A price and seven random-walk signals; daily changes of ``lead`` move
    the next day's return by ``effect`` per standard deviation."""
    rng = np.random.default_rng(seed)
    dates = to_day(start) + np.arange(n_days) * np.timedelta64(1, "D")
    steps = rng.standard_normal((n_days, len(names)))
    levels = 100.0 + np.cumsum(steps, axis=0)
    lead_step = steps[:, list(names).index(lead)]
    ret = ret_sd * rng.standard_normal(n_days)
    ret[1:] += effect * lead_step[:-1]
    ret[0] = 0.0
    price = 100.0 * np.cumprod(1.0 + ret)
    out = {"price": Signal("price", dates, price)}
    for i, name in enumerate(names):
        out[name] = Signal(name, dates, levels[:, i])
    return out


def write_panel(signals: dict[str, Signal], directory, analysis_end, leave_out_end, price: str = "price") -> Path:
    """Write signals as CSV files plus a manifest; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    files = {}
    for name, s in signals.items():
        path = directory / f"{name}.csv"
        write_csv(s, path)
        files[name] = path
    manifest = Manifest(files, to_day(analysis_end), to_day(leave_out_end), price)
    path = directory / "manifest.yaml"
    write_manifest(manifest, path)
    return path
