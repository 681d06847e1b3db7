"""Daily signals -> VAR/IRF screening -> sign strategies -> backtests."""

from .backtest import CostModel, Ledger, cost_sweep, monte_carlo_random, run_backtest
from .config import RunConfig, load_config
from .errors import BankruptShortError, ConfigError, DataError, NumericError, SignalTraderError
from .evaluation import evaluate, kde, sharpe, wilcoxon_rank_sum
from .irf import IrfSet, bootstrap_irf, compute_irf, cumulative_screen, permutation_test
from .preprocess import adf_test, auto_stationarize, kpss_test, stationarity_report, z_transform
from .sentiment import Lexicon, build_signals, daily_polarization, daily_valence, tokenize
from .signals import Panel, Signal, align, load_csv, load_manifest, returns
from .strategies import PredictionSeries, StrategySpec, predict
from .var import VarFit, fit_var, select_lag

__all__ = [
    "BankruptShortError", "ConfigError", "CostModel", "DataError", "IrfSet", "Ledger", "Lexicon",
    "NumericError", "Panel", "PredictionSeries", "RunConfig", "Signal", "SignalTraderError",
    "StrategySpec", "VarFit", "adf_test", "align", "auto_stationarize", "bootstrap_irf",
    "build_signals", "compute_irf", "cost_sweep", "cumulative_screen", "daily_polarization",
    "daily_valence", "evaluate", "fit_var", "kde", "kpss_test", "load_config", "load_csv",
    "load_manifest", "monte_carlo_random", "permutation_test", "predict", "returns", "run_backtest",
    "select_lag", "sharpe", "stationarity_report", "tokenize", "wilcoxon_rank_sum", "z_transform",
]
