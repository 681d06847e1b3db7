"""Daily signal time series: loading, alignment, persistence and the
analysis / leave-out split."""

from __future__ import annotations

import csv
import datetime as dt
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np
import yaml

from .errors import ConfigError, DataError

GapPolicy = Literal["fail", "forward_fill", "drop"]
DAY = np.timedelta64(1, "D")


def to_day(value) -> np.datetime64:
    """Coerce a date-like value to a day-granular UTC ``datetime64[D]``.

    Intra-day timestamps are converted to UTC when they carry an offset and
    then truncated to the day.
    """
    if isinstance(value, np.datetime64):
        return value.astype("datetime64[D]")
    if isinstance(value, dt.datetime):
        if value.tzinfo is not None:
            value = value.astimezone(dt.timezone.utc)
        return np.datetime64(value.date(), "D")
    if isinstance(value, dt.date):
        return np.datetime64(value, "D")
    text = str(value).strip()
    if len(text) == 10:
        return np.datetime64(dt.date.fromisoformat(text), "D")
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    return to_day(dt.datetime.fromisoformat(text))


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Signal:
    name: str
    dates: np.ndarray
    values: np.ndarray
    transform_log: tuple[str, ...] = ()

    def __post_init__(self):
        dates = _frozen(self.dates, "datetime64[D]")
        values = _frozen(self.values, float)
        if dates.ndim != 1 or values.ndim != 1 or len(dates) != len(values):
            raise DataError(f"{self.name}: dates and values must be 1-d of equal length")
        if len(dates) > 1 and np.any(np.diff(dates) <= np.timedelta64(0, "D")):
            raise DataError(f"{self.name}: dates must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise DataError(f"{self.name}: values contain NaN or infinite entries")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "transform_log", tuple(self.transform_log))

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Signal):
            return NotImplemented
        return (
            self.name == other.name
            and self.transform_log == other.transform_log
            and np.array_equal(self.dates, other.dates)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def with_values(self, dates, values, transform: str | None = None, name: str | None = None) -> "Signal":
        log = self.transform_log + ((transform,) if transform else ())
        return Signal(name or self.name, dates, values, log)

    def between(self, start=None, end=None) -> "Signal":
        """Restrict to ``start <= date <= end`` (either bound optional)."""
        mask = np.ones(len(self), dtype=bool)
        if start is not None:
            mask &= self.dates >= to_day(start)
        if end is not None:
            mask &= self.dates <= to_day(end)
        return Signal(self.name, self.dates[mask], self.values[mask], self.transform_log)

    @classmethod
    def from_values(cls, name: str, values: Sequence[float], start="2000-01-01") -> "Signal":
        """Build a gapless daily signal starting at ``start``."""
        values = np.asarray(values, dtype=float)
        dates = to_day(start) + np.arange(len(values)) * DAY
        return cls(name, dates, values)


def load_csv(path, name: str | None = None) -> Signal:
    """Read a ``date,value`` CSV file into a Signal sorted by date."""
    path = Path(path)
    name = name or path.stem
    rows: list[tuple[np.datetime64, float]] = []
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot open ({exc})") from exc
    with fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if lineno == 1 and row[0].strip().lower() == "date":
                continue
            if len(row) != 2:
                raise DataError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                day = to_day(row[0])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: bad date {row[0]!r}") from exc
            try:
                value = float(row[1])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: bad value {row[1]!r}") from exc
            if not math.isfinite(value):
                raise DataError(f"{path}:{lineno}: non-finite value {row[1]!r}")
            rows.append((day, value))
    rows.sort(key=lambda r: r[0])
    for (d0, _), (d1, _) in zip(rows, rows[1:]):
        if d0 == d1:
            raise DataError(f"{path}: duplicate date {d0}")
    dates = np.array([r[0] for r in rows], dtype="datetime64[D]")
    values = np.array([r[1] for r in rows], dtype=float)
    return Signal(name, dates, values)


def format_value(v: float) -> str:
    return f"{v:.12g}"


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(signal: Signal, path) -> None:
    lines = ["date,value"]
    lines += [f"{d},{format_value(v)}" for d, v in zip(signal.dates, signal.values)]
    atomic_write_text(path, "\n".join(lines) + "\n")


@dataclass(frozen=True)
class Panel:
    """Signals sharing one date index, with an optional analysis/leave-out split."""

    signals: tuple[Signal, ...]
    analysis_end: np.datetime64 | None = None
    leave_out_end: np.datetime64 | None = None
    _values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        signals = tuple(self.signals)
        if not signals:
            raise DataError("panel needs at least one signal")
        names = [s.name for s in signals]
        if len(set(names)) != len(names):
            raise DataError(f"duplicate signal names in panel: {names}")
        for s in signals[1:]:
            if not np.array_equal(s.dates, signals[0].dates):
                raise DataError(f"signal {s.name} is not aligned with {signals[0].name}")
        object.__setattr__(self, "signals", signals)
        a_end = None if self.analysis_end is None else to_day(self.analysis_end)
        l_end = None if self.leave_out_end is None else to_day(self.leave_out_end)
        if a_end is not None and l_end is not None:
            if not a_end < l_end:
                raise ConfigError(f"analysis_end {a_end} must precede leave_out_end {l_end}")
            dates = signals[0].dates
            if len(dates) and not (dates[0] <= a_end and l_end <= dates[-1]):
                raise ConfigError(
                    f"split [{a_end}, {l_end}] outside panel range [{dates[0]}, {dates[-1]}]"
                )
        object.__setattr__(self, "analysis_end", a_end)
        object.__setattr__(self, "leave_out_end", l_end)
        values = np.column_stack([s.values for s in signals]) if len(signals[0]) else np.empty((0, len(signals)))
        values.flags.writeable = False
        object.__setattr__(self, "_values", values)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.signals)

    @property
    def dates(self) -> np.ndarray:
        return self.signals[0].dates

    @property
    def values(self) -> np.ndarray:
        """T x k matrix, columns in panel order."""
        return self._values

    def __len__(self) -> int:
        return len(self.dates)

    def __getitem__(self, name: str) -> Signal:
        for s in self.signals:
            if s.name == name:
                return s
        raise KeyError(name)

    def between(self, start=None, end=None) -> "Panel":
        signals = tuple(s.between(start, end) for s in self.signals)
        return Panel(signals)

    def analysis(self) -> "Panel":
        if self.analysis_end is None:
            raise ConfigError("panel has no analysis_end")
        return self.between(end=self.analysis_end)

    def leave_out(self) -> "Panel":
        if self.analysis_end is None or self.leave_out_end is None:
            raise ConfigError("panel has no leave-out range")
        return self.between(start=self.analysis_end + DAY, end=self.leave_out_end)

    def reorder(self, names: Sequence[str]) -> "Panel":
        if sorted(names) != sorted(self.names):
            raise ConfigError(f"ordering {list(names)} does not match panel variables {list(self.names)}")
        return Panel(tuple(self[n] for n in names), self.analysis_end, self.leave_out_end)

    @classmethod
    def from_array(cls, values, names: Sequence[str] | None = None, start="2000-01-01") -> "Panel":
        values = np.asarray(values, dtype=float)
        if values.ndim != 2:
            raise DataError("panel values must be a T x k matrix")
        names = list(names) if names is not None else [f"y{i}" for i in range(values.shape[1])]
        return cls(tuple(Signal.from_values(n, values[:, i], start) for i, n in enumerate(names)))


def align(
    signals: Iterable[Signal],
    gap_policy: GapPolicy = "fail",
    analysis_end=None,
    leave_out_end=None,
) -> Panel:
    """Restrict signals to their common date range and resolve missing days."""
    signals = list(signals)
    if len(signals) < 2:
        raise DataError("align needs at least 2 signals")
    if gap_policy not in ("fail", "forward_fill", "drop"):
        raise ConfigError(f"unknown gap policy {gap_policy!r}")
    if any(len(s) == 0 for s in signals):
        raise DataError("cannot align an empty signal")
    start = max(s.dates[0] for s in signals)
    end = min(s.dates[-1] for s in signals)
    if start > end:
        raise DataError(f"signals have no overlapping date range (latest start {start}, earliest end {end})")
    calendar = np.arange(start, end + DAY, DAY)

    present = [np.isin(calendar, s.dates) for s in signals]
    if gap_policy == "fail":
        for s, mask in zip(signals, present):
            if not mask.all():
                missing = calendar[~mask]
                raise DataError(f"{s.name}: {len(missing)} missing day(s), first {missing[0]}")
        out = [s.between(start, end) for s in signals]
    elif gap_policy == "drop":
        keep = np.logical_and.reduce(present)
        days = calendar[keep]
        out = [Signal(s.name, days, s.values[np.isin(s.dates, days)], s.transform_log) for s in signals]
    else:
        out = []
        for s in signals:
            # index of the last observation on or before each calendar day
            idx = np.searchsorted(s.dates, calendar, side="right") - 1
            if idx[0] < 0:
                raise DataError(f"{s.name}: nothing to forward-fill from at {calendar[0]}")
            out.append(Signal(s.name, calendar, s.values[idx], s.transform_log))
    return Panel(tuple(out), analysis_end, leave_out_end)


def returns(price: Signal, name: str = "returns") -> Signal:
    """Proportional price changes, one element shorter than ``price``."""
    p = price.values
    if len(p) < 2:
        raise DataError(f"{price.name}: need at least 2 prices for returns")
    if np.any(p <= 0):
        raise DataError(f"{price.name}: prices must be strictly positive")
    ret = (p[1:] - p[:-1]) / p[:-1]
    return price.with_values(price.dates[1:], ret, transform="returns", name=name)


@dataclass(frozen=True)
class Manifest:
    """Signal name -> CSV path, plus the evaluation split."""

    files: dict[str, Path]
    analysis_end: np.datetime64
    leave_out_end: np.datetime64
    price: str = "price"
    gap_policy: GapPolicy = "fail"
    extra_lag: dict[str, int] = field(default_factory=dict)

    def load_signals(self) -> list[Signal]:
        return [load_csv(path, name) for name, path in self.files.items()]


def load_manifest(path) -> Manifest:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read manifest ({exc})") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
    if not isinstance(raw, dict) or "signals" not in raw:
        raise ConfigError(f"{path}: manifest needs a 'signals' mapping")
    try:
        files = {str(k): (path.parent / v).resolve() for k, v in raw["signals"].items()}
        a_end = to_day(raw["analysis_end"])
        l_end = to_day(raw["leave_out_end"])
    except (KeyError, ValueError, AttributeError) as exc:
        raise ConfigError(f"{path}: bad manifest ({exc})") from exc
    if not a_end < l_end:
        raise ConfigError(f"{path}: analysis_end must precede leave_out_end")
    price = str(raw.get("price", "price"))
    if price not in files:
        raise ConfigError(f"{path}: price signal {price!r} not listed under signals")
    for name, f in files.items():
        if not f.exists():
            raise ConfigError(f"{path}: file for {name!r} not found: {f}")
    extra = {str(k): int(v) for k, v in (raw.get("extra_lag") or {}).items()}
    return Manifest(files, a_end, l_end, price, raw.get("gap_policy", "fail"), extra)


def write_manifest(manifest: Manifest, path) -> None:
    path = Path(path)
    doc = {
        "signals": {k: os.path.relpath(v, path.parent) for k, v in manifest.files.items()},
        "price": manifest.price,
        "analysis_end": str(manifest.analysis_end),
        "leave_out_end": str(manifest.leave_out_end),
        "gap_policy": manifest.gap_policy,
    }
    if manifest.extra_lag:
        doc["extra_lag"] = dict(manifest.extra_lag)
    atomic_write_text(path, yaml.safe_dump(doc, sort_keys=False))
