"""Daily position predictions in {-1, 0, +1}.

Every predictor maps information available up to day t to a prediction for
the price move from t to t+1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .signals import Signal, to_day

KINDS = ("signal", "combined", "momentum", "upd", "rsi", "random", "buy_and_hold")


@dataclass(frozen=True)
class PredictionSeries:
    dates: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        dates = np.array(self.dates, dtype="datetime64[D]")
        values = np.array(self.values, dtype=np.int8)
        if len(dates) != len(values):
            raise DataError("prediction dates and values differ in length")
        if not np.isin(values, (-1, 0, 1)).all():
            raise DataError("predictions must be -1, 0 or +1")
        dates.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PredictionSeries):
            return NotImplemented
        return np.array_equal(self.dates, other.dates) and np.array_equal(self.values, other.values)

    __hash__ = None

    def __neg__(self) -> "PredictionSeries":
        return PredictionSeries(self.dates, -self.values)

    def between(self, start=None, end=None) -> "PredictionSeries":
        mask = np.ones(len(self), dtype=bool)
        if start is not None:
            mask &= self.dates >= to_day(start)
        if end is not None:
            mask &= self.dates <= to_day(end)
        return PredictionSeries(self.dates[mask], self.values[mask])

    def on(self, dates) -> "PredictionSeries":
        """Select exactly ``dates``; all must be present."""
        dates = np.asarray(dates, dtype="datetime64[D]")
        idx = np.searchsorted(self.dates, dates)
        if np.any(idx >= len(self.dates)) or not np.array_equal(self.dates[np.minimum(idx, len(self.dates) - 1)], dates):
            raise DataError("prediction series does not cover the requested dates")
        return PredictionSeries(dates, self.values[idx])

    def to_csv(self) -> str:
        rows = ["date,prediction"] + [f"{d},{int(v)}" for d, v in zip(self.dates, self.values)]
        return "\n".join(rows) + "\n"


def _sign(x: np.ndarray) -> np.ndarray:
    return np.sign(x).astype(np.int8)


@dataclass(frozen=True)
class StrategySpec:
    name: str
    kind: str
    signal_name: str | None = None
    sign: int = 1
    members: tuple["StrategySpec", ...] = ()
    window: int = 5
    hi: float = 0.7
    lo: float = 0.3
    seed: int = 0
    extra_lag: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "signal":
            if not self.signal_name:
                raise ConfigError(f"strategy {self.name}: signal kind needs signal_name")
            if self.sign not in (1, -1):
                raise ConfigError(f"strategy {self.name}: sign must be +1 or -1")
        if self.kind == "combined" and not self.members:
            raise ConfigError(f"strategy {self.name}: combined needs at least one member")
        if self.kind == "rsi" and self.window < 2:
            raise ConfigError(f"strategy {self.name}: rsi window must be >= 2")
        object.__setattr__(self, "members", tuple(self.members))

    def to_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind}
        if self.kind == "signal":
            d.update(signal_name=self.signal_name, sign=self.sign)
            if self.extra_lag:
                d["extra_lag"] = self.extra_lag
        elif self.kind == "combined":
            d["members"] = [m.to_dict() for m in self.members]
        elif self.kind == "rsi":
            d.update(window=self.window, hi=self.hi, lo=self.lo)
        elif self.kind == "random":
            d["seed"] = self.seed
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "StrategySpec":
        d = dict(d)
        try:
            members = tuple(cls.from_dict(m) for m in d.pop("members", ()))
            return cls(members=members, **d)
        except TypeError as exc:
            raise ConfigError(f"bad strategy spec {d!r}: {exc}") from exc


def predict_signal(y: Signal, sign: int = 1, extra_lag: int = 0) -> PredictionSeries:
    """sign(s * (Y(t) - Y(t-1))), with Y shifted back by ``extra_lag`` days of
    publication delay. Days without enough history predict 0."""
    if sign not in (1, -1):
        raise ConfigError("sign must be +1 or -1")
    shift = 1 + extra_lag
    if len(y) <= shift:
        raise DataError(f"{y.name}: need at least {shift + 1} observations")
    out = np.zeros(len(y), dtype=np.int8)
    v = y.values
    out[shift:] = _sign(sign * np.diff(v)[: len(v) - shift])
    return PredictionSeries(y.dates, out)


def predict_combined(members: Sequence[PredictionSeries]) -> PredictionSeries:
    """Majority vote: sign of the summed member predictions."""
    if not members:
        raise DataError("combined strategy needs members")
    for m in members[1:]:
        if not np.array_equal(m.dates, members[0].dates):
            raise DataError("combined members are not aligned")
    total = np.sum([m.values.astype(int) for m in members], axis=0)
    return PredictionSeries(members[0].dates, _sign(total))


def predict_momentum(price: Signal) -> PredictionSeries:
    if len(price) < 2:
        raise DataError("momentum needs at least 2 prices")
    out = np.zeros(len(price), dtype=np.int8)
    out[1:] = _sign(np.diff(price.values))
    return PredictionSeries(price.dates, out)


def predict_upd(price: Signal) -> PredictionSeries:
    return -predict_momentum(price)


def predict_rsi(price: Signal, window: int = 5, hi: float = 0.7, lo: float = 0.3) -> PredictionSeries:
    """Reversal rule on the share of up days among the last ``window`` moves."""
    if window < 2:
        raise ConfigError("rsi window must be >= 2")
    if len(price) < window + 1:
        raise DataError(f"rsi needs at least {window + 1} prices")
    up = (np.diff(price.values) > 0).astype(int)
    counts = np.convolve(up, np.ones(window, dtype=int), mode="valid")  # moves ending at t = window..T-1
    share = counts / window
    out = np.zeros(len(price), dtype=np.int8)
    out[window:] = np.where(share >= hi, -1, np.where(share <= lo, 1, 0))
    return PredictionSeries(price.dates, out)


def predict_random(dates, seed: int) -> PredictionSeries:
    dates = np.asarray(dates, dtype="datetime64[D]")
    draws = np.random.default_rng(seed).standard_normal(len(dates))
    return PredictionSeries(dates, np.where(draws < 0, -1, 1))


def predict_buy_and_hold(dates) -> PredictionSeries:
    dates = np.asarray(dates, dtype="datetime64[D]")
    out = np.zeros(len(dates), dtype=np.int8)
    out[:1] = 1
    return PredictionSeries(dates, out)


def predict(spec: StrategySpec, price: Signal, signals: Mapping[str, Signal], dates) -> PredictionSeries:
    """Predictions of ``spec`` on the evaluation ``dates``.

    ``price`` and ``signals`` carry the full history so that look-back windows
    reaching before the evaluation start are filled from real data.
    """
    dates = np.asarray(dates, dtype="datetime64[D]")
    if spec.kind == "signal":
        if spec.signal_name not in signals:
            raise DataError(f"strategy {spec.name}: unknown signal {spec.signal_name!r}")
        full = predict_signal(signals[spec.signal_name], spec.sign, spec.extra_lag)
    elif spec.kind == "combined":
        return predict_combined([predict(m, price, signals, dates) for m in spec.members])
    elif spec.kind == "momentum":
        full = predict_momentum(price)
    elif spec.kind == "upd":
        full = predict_upd(price)
    elif spec.kind == "rsi":
        full = predict_rsi(price, spec.window, spec.hi, spec.lo)
    elif spec.kind == "random":
        return predict_random(dates, spec.seed)
    else:
        return predict_buy_and_hold(dates)
    return full.on(dates)


def benchmark_specs(rsi_window: int = 5, rsi_hi: float = 0.7, rsi_lo: float = 0.3) -> list[StrategySpec]:
    return [
        StrategySpec("Momentum", "momentum"),
        StrategySpec("UPD", "upd"),
        StrategySpec("RSI", "rsi", window=rsi_window, hi=rsi_hi, lo=rsi_lo),
        StrategySpec("Buy and hold", "buy_and_hold"),
    ]
