"""Single-asset all-in trading simulation with proportional costs and
one-day shorting."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import BankruptShortError, ConfigError, DataError
from .signals import Signal, format_value
from .strategies import PredictionSeries

Mode = Literal["full", "long_only", "short_only", "forced_close"]
MODES = ("full", "long_only", "short_only", "forced_close")
DEFAULT_COST_GRID = (0.0, 0.0005, 0.001, 0.0015, 0.002, 0.0025, 0.003)
ACTIONS = ("hold", "buy", "sell", "short")
HOLD, BUY, SELL, SHORT = range(4)
MC_CHUNK = 512
RANDOM_TRADER_STREAM = 3


@dataclass(frozen=True)
class CostModel:
    c_b: float = 0.0
    c_s: float = 0.0

    def __post_init__(self):
        for name in ("c_b", "c_s"):
            v = getattr(self, name)
            if not 0.0 <= v <= 0.05:
                raise ConfigError(f"{name}={v} outside [0, 0.05]")

    @classmethod
    def uniform(cls, c: float) -> "CostModel":
        return cls(c, c)


@dataclass(frozen=True)
class Ledger:
    """Per-day record. Row t holds the prediction and action taken at t, the
    holdings after that action, and the capital marked at t's close."""

    dates: np.ndarray
    prediction: np.ndarray
    action: tuple[str, ...]
    n_usd: np.ndarray
    n_btc: np.ndarray
    cr: np.ndarray
    mode: str = "full"

    @property
    def profit_pct(self) -> np.ndarray:
        return (self.cr - 1.0) * 100.0

    @property
    def final_profit(self) -> float:
        return float(self.profit_pct[-1])

    def __len__(self) -> int:
        return len(self.cr)

    def to_csv(self) -> str:
        rows = ["date,prediction,action,nUSD,nBTC,CR,profit_pct"]
        for i in range(len(self)):
            rows.append(
                f"{self.dates[i]},{int(self.prediction[i])},{self.action[i]},"
                f"{format_value(self.n_usd[i])},{format_value(self.n_btc[i])},"
                f"{format_value(self.cr[i])},{format_value(self.profit_pct[i])}"
            )
        return "\n".join(rows) + "\n"


def _simulate(prices: np.ndarray, preds: np.ndarray, costs: CostModel, mode: str):
    """Vectorized over traders (rows of ``preds``). Returns state histories and
    the first bankrupt step per trader (-1 if none)."""
    B, T = preds.shape[0], len(prices)
    cb, cs = costs.c_b, costs.c_s
    keep_b, keep_s = 1 - cb, 1 - cs
    n_usd = np.ones(B)
    n_btc = np.zeros(B)
    usd_hist = np.zeros((B, T))
    btc_hist = np.zeros((B, T))
    cr = np.zeros((B, T))
    actions = np.full((B, T), HOLD, dtype=np.int8)
    bankrupt = np.full(B, -1)
    cr[:, 0] = 1.0
    for t in range(T - 1):
        p, p_next = prices[t], prices[t + 1]
        pr = preds[:, t]
        alive = bankrupt < 0
        flat = n_btc == 0
        buy = alive & (pr == 1) & flat
        sell = alive & (pr == -1) & (n_btc > 0)
        short = alive & (pr == -1) & flat
        if mode == "short_only":
            buy[:] = False
        elif mode == "long_only":
            short[:] = False
        if buy.any():
            n_btc = np.where(buy, n_usd * keep_b / p, n_btc)
            n_usd = np.where(buy, 0.0, n_usd)
        if sell.any():
            n_usd = np.where(sell, n_btc * keep_s * p, n_usd)
            n_btc = np.where(sell, 0.0, n_btc)
        if short.any():
            borrowed = n_usd / p
            settled = n_usd + borrowed * keep_s * p - borrowed * p_next / keep_b
            n_usd = np.where(short, settled, n_usd)
            broke = short & (n_usd < 0)
            bankrupt = np.where(broke & (bankrupt < 0), t, bankrupt)
        actions[:, t] = np.select([buy, sell, short], [BUY, SELL, SHORT], HOLD)
        usd_hist[:, t] = n_usd
        btc_hist[:, t] = n_btc
        cr[:, t + 1] = n_usd + n_btc * p_next * keep_s
        if mode == "forced_close":
            held = n_btc > 0
            if held.any():
                n_usd = np.where(held, n_btc * keep_s * p_next, n_usd)
                n_btc = np.where(held, 0.0, n_btc)
    usd_hist[:, T - 1] = n_usd
    btc_hist[:, T - 1] = n_btc
    return usd_hist, btc_hist, cr, actions, bankrupt


def _prepare(price, predictions) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(price, Signal):
        dates, prices = price.dates, price.values
    else:
        prices = np.asarray(price, dtype=float)
        dates = np.datetime64("2000-01-01") + np.arange(len(prices)) * np.timedelta64(1, "D")
    if len(prices) < 2:
        raise DataError("backtest needs at least 2 prices")
    if np.any(prices <= 0):
        raise DataError("prices must be strictly positive")
    if isinstance(predictions, PredictionSeries):
        if not np.array_equal(predictions.dates, dates):
            raise DataError("predictions are not aligned with the price dates")
        preds = predictions.values.astype(np.int8)
    else:
        preds = np.asarray(predictions, dtype=np.int8)
        if len(preds) == len(prices) - 1:
            # the final day's prediction is never used
            preds = np.append(preds, 0)
        if len(preds) != len(prices):
            raise DataError(f"got {len(preds)} predictions for {len(prices)} prices")
    return dates, prices, preds


def run_backtest(price, predictions, costs: CostModel = CostModel(), mode: Mode = "full") -> Ledger:
    """Simulate one trader. ``predictions`` may cover all T days (the last is
    ignored) or the T-1 trading days."""
    if mode not in MODES:
        raise ConfigError(f"unknown backtest mode {mode!r}")
    dates, prices, preds = _prepare(price, predictions)
    usd, btc, cr, actions, bankrupt = _simulate(prices, preds[None, :], costs, mode)
    ledger = Ledger(
        dates=dates,
        prediction=preds,
        action=tuple(ACTIONS[a] for a in actions[0]),
        n_usd=usd[0],
        n_btc=btc[0],
        cr=cr[0],
        mode=mode,
    )
    if bankrupt[0] >= 0:
        t = int(bankrupt[0])
        partial = Ledger(
            dates[: t + 2], preds[: t + 2], ledger.action[: t + 2], usd[0, : t + 2], btc[0, : t + 2], cr[0, : t + 2], mode
        )
        raise BankruptShortError(f"short on {dates[t]} left negative cash {usd[0, t]:.6g}", partial)
    return ledger


def cost_sweep(price, predictions, costs: Sequence[float] = DEFAULT_COST_GRID, mode: Mode = "full") -> dict[float, float]:
    """Final profit (percent) per uniform cost level, same predictions throughout."""
    costs = list(costs)
    if costs != sorted(costs):
        raise ConfigError("cost grid must be sorted ascending")
    return {c: run_backtest(price, predictions, CostModel.uniform(c), mode).final_profit for c in costs}


@dataclass(frozen=True)
class RandomTraders:
    dates: np.ndarray
    mean_profit: np.ndarray
    sd_profit: np.ndarray
    final_profits: np.ndarray
    cr: np.ndarray  # n_traders x T

    def to_rows(self) -> list[tuple]:
        return [(str(d), float(m), float(s)) for d, m, s in zip(self.dates, self.mean_profit, self.sd_profit)]


def random_predictions(n_days: int, seed: int, trader: int) -> np.ndarray:
    draws = np.random.default_rng([int(seed), RANDOM_TRADER_STREAM, int(trader)]).standard_normal(n_days)
    return np.where(draws < 0, -1, 1).astype(np.int8)


def monte_carlo_random(
    price,
    n_traders: int = 10_000,
    costs: CostModel = CostModel(),
    seed: int = 0,
    mode: Mode = "full",
    threads: int = 1,
) -> RandomTraders:
    """Backtest ``n_traders`` independent random-sign traders.

    Trader i draws its predictions from its own counter-based seed, so the
    result does not depend on chunking or thread count.
    """
    if n_traders < 2:
        raise ConfigError("need at least 2 random traders")
    dates, prices, _ = _prepare(price, np.zeros(len(getattr(price, "values", price)), dtype=np.int8))
    T = len(prices)
    chunks = [range(s, min(s + MC_CHUNK, n_traders)) for s in range(0, n_traders, MC_CHUNK)]

    def run(chunk):
        preds = np.stack([random_predictions(T, seed, i) for i in chunk])
        _, _, cr, _, bankrupt = _simulate(prices, preds, costs, mode)
        if np.any(bankrupt >= 0):
            i = chunk[int(np.argmax(bankrupt >= 0))]
            raise BankruptShortError(f"random trader {i} went bankrupt on a short")
        return cr

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    cr = np.vstack(parts)
    profit = (cr - 1.0) * 100.0
    return RandomTraders(dates, profit.mean(axis=0), profit.std(axis=0, ddof=1), profit[:, -1].copy(), cr)
