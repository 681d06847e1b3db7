"""Run configuration loaded from YAML."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import yaml

from .backtest import DEFAULT_COST_GRID, MODES
from .errors import ConfigError
from .signals import load_manifest


@dataclass(frozen=True)
class StationaritySettings:
    max_diff_order: int = 2
    # returns stay undifferenced unless this is set
    difference_returns: bool = False


@dataclass(frozen=True)
class VarSettings:
    lag: int | str = 1  # an integer, or "auto" for BIC selection
    max_lag: int = 5
    residual_lags: int = 10


@dataclass(frozen=True)
class IrfSettings:
    horizon: int = 10
    n_boot: int = 10_000
    n_perm: int = 1000  # 0 skips the permutation test
    threshold: float = 0.001
    ordering: tuple[str, ...] | None = None


@dataclass(frozen=True)
class StrategySettings:
    rsi_window: int = 5
    rsi_hi: float = 0.7
    rsi_lo: float = 0.3
    n_random: int = 10_000
    extra: tuple[dict, ...] = ()


@dataclass(frozen=True)
class CostSettings:
    c: float = 0.0
    sweep: tuple[float, ...] = DEFAULT_COST_GRID
    variants: tuple[str, ...] = ("long_only", "short_only", "forced_close")


@dataclass(frozen=True)
class EvalSettings:
    r_f: float = 0.0
    kde_bandwidth: float = 15.0


@dataclass(frozen=True)
class SentimentSettings:
    corpus: Path | None = None  # TAB-separated "timestamp<TAB>text" lines
    valence_lexicon: Path | None = None
    polarity_lexicon: Path | None = None
    start: str | None = None
    end: str | None = None


@dataclass(frozen=True)
class RunConfig:
    panel: Path
    output_dir: Path = Path("out")
    seed: int = 0
    threads: int = 1
    gap_policy: str | None = None
    stationarity: StationaritySettings = field(default_factory=StationaritySettings)
    var: VarSettings = field(default_factory=VarSettings)
    irf: IrfSettings = field(default_factory=IrfSettings)
    strategies: StrategySettings = field(default_factory=StrategySettings)
    costs: CostSettings = field(default_factory=CostSettings)
    evaluation: EvalSettings = field(default_factory=EvalSettings)
    sentiment: SentimentSettings = field(default_factory=SentimentSettings)

    def validate(self, need_panel: bool = True) -> "RunConfig":
        if need_panel:
            if not self.panel.exists():
                raise ConfigError(f"panel manifest not found: {self.panel}")
            load_manifest(self.panel)  # checks files and date order
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.var.lag != "auto" and (not isinstance(self.var.lag, int) or self.var.lag < 1):
            raise ConfigError(f"var.lag must be a positive integer or 'auto', got {self.var.lag!r}")
        if self.irf.horizon < 1:
            raise ConfigError("irf.horizon must be positive")
        if self.irf.n_boot < 100:
            raise ConfigError("irf.n_boot must be at least 100")
        if self.irf.n_perm and self.irf.n_perm < 100:
            raise ConfigError("irf.n_perm must be 0 or at least 100")
        if list(self.costs.sweep) != sorted(self.costs.sweep):
            raise ConfigError("costs.sweep must be sorted ascending")
        bad = [m for m in self.costs.variants if m not in MODES]
        if bad:
            raise ConfigError(f"unknown backtest modes {bad}")
        for name in sorted(_SECTION_PATHS):
            path = getattr(self.sentiment, name)
            if path is not None and not path.exists():
                raise ConfigError(f"sentiment.{name} not found: {path}")
        if self.strategies.n_random < 2:
            raise ConfigError("strategies.n_random must be at least 2")
        return self


_SECTIONS = {
    "stationarity": StationaritySettings,
    "var": VarSettings,
    "irf": IrfSettings,
    "strategies": StrategySettings,
    "costs": CostSettings,
    "evaluation": EvalSettings,
    "sentiment": SentimentSettings,
}

_SECTION_PATHS = {"corpus", "valence_lexicon", "polarity_lexicon"}


def _section(cls, raw, base: Path) -> object:
    raw = raw or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"section for {cls.__name__} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {cls.__name__}")
    values = {}
    for k, v in raw.items():
        if k in _SECTION_PATHS and v is not None:
            v = (base / v).resolve()
        values[k] = tuple(v) if isinstance(v, list) else v
    return cls(**values)


def load_config(
    path,
    seed: int | None = None,
    out: str | None = None,
    threads: int | None = None,
    need_panel: bool = True,
) -> RunConfig:
    """Read a YAML run config. Relative paths resolve against the config file."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if not isinstance(raw, dict) or "panel" not in raw:
        raise ConfigError(f"{path}: config needs a 'panel' entry")
    base = path.parent
    kwargs = {}
    for key, value in raw.items():
        if key in _SECTIONS:
            kwargs[key] = _section(_SECTIONS[key], value, base)
        elif key in ("panel", "output_dir"):
            kwargs[key] = (base / value).resolve()
        elif key in ("seed", "threads", "gap_policy"):
            kwargs[key] = value
        else:
            raise ConfigError(f"{path}: unknown config key {key!r}")
    try:
        config = RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if out is not None:
        overrides["output_dir"] = Path(out).resolve()
    if threads is not None:
        overrides["threads"] = threads
    return replace(config, **overrides).validate(need_panel)
