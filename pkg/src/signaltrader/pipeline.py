"""Pipeline stages: analyze -> design -> backtest -> report.

Each stage reads the previous stage's files from the output directory, so
stages can be rerun independently.
"""

from __future__ import annotations

import contextlib
import csv
import io
import json
import logging
import math
import re
from pathlib import Path

import numpy as np
import yaml

from . import backtest as bt
from .config import RunConfig
from .errors import ConfigError, DataError, SignalTraderError
from .evaluation import evaluate, kde, sharpe_many, table_rows
from .irf import bootstrap_irf, cumulative_screen, permutation_test
from .sentiment import Lexicon, build_signals, read_corpus
from .preprocess import auto_stationarize, stationarity_report, z_transform
from .signals import DAY, Panel, align, atomic_write_text, format_value, load_manifest, returns, write_csv
from .strategies import StrategySpec, benchmark_specs, predict
from .var import fit_var, residual_diagnostics, select_lag

log = logging.getLogger(__name__)

RETURNS = "returns"


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except SignalTraderError as exc:
        exc.args = (f"[{name}] {exc.args[0] if exc.args else ''}",) + exc.args[1:]
        raise


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, (np.floating, np.integer)):
        return _clean(obj.item())
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(_clean(obj), indent=2) + "\n")


def read_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"missing stage input {path}; run the previous stage first")
    return json.loads(path.read_text(encoding="utf-8"))


def write_rows(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) if isinstance(v, float) else v for v in row])
    atomic_write_text(path, buf.getvalue())


def slug(name: str) -> str:
    return re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_") or "strategy"


def _load_raw_panel(config: RunConfig):
    manifest = load_manifest(config.panel)
    policy = config.gap_policy or manifest.gap_policy
    signals = manifest.load_signals()
    raw = align(signals, policy, manifest.analysis_end, manifest.leave_out_end)
    return manifest, raw, policy


def build_var_panel(config: RunConfig):
    """Returns-first panel of model variables over the analysis period, before
    stationarity transforms."""
    manifest, raw, policy = _load_raw_panel(config)
    ret = returns(raw[manifest.price], name=RETURNS)
    others = [s for s in raw.signals if s.name != manifest.price]
    panel = align([ret] + others, policy, manifest.analysis_end, manifest.leave_out_end)
    order = list(config.irf.ordering) if config.irf.ordering else list(panel.names)
    panel = panel.reorder(order)
    return manifest, panel.analysis()


def analyze(config: RunConfig) -> dict:
    out = config.output_dir / "analysis"
    with stage("analyze"):
        manifest, panel = build_var_panel(config)
        reports, transformed = {}, []
        for s in panel.signals:
            if s.name == RETURNS and not config.stationarity.difference_returns:
                rep = stationarity_report(s)
                if rep.verdict != "stationary":
                    log.warning("returns verdict is %s; kept undifferenced", rep.verdict)
                x = s
            else:
                x, rep = auto_stationarize(s, config.stationarity.max_diff_order)
            reports[s.name] = rep.to_dict()
            transformed.append(x)
        # differencing shortens series at the front; keep the common span
        common = align(transformed, "drop")
        zsignals, zparams = [], {}
        for s in common.signals:
            z, params = z_transform(s)
            zsignals.append(z)
            zparams[s.name] = params.to_dict()
        zpanel = Panel(tuple(zsignals))

        bic_scores = None
        if config.var.lag == "auto":
            lag, bic_scores = select_lag(zpanel, config.var.max_lag)
        else:
            lag = int(config.var.lag)
        fit = fit_var(zpanel, lag)
        diagnostics = residual_diagnostics(fit, config.var.residual_lags)
        irfs = bootstrap_irf(fit, zpanel, config.irf.horizon, config.irf.n_boot, config.seed, config.threads)
        scaled = irfs.rescaled({n: p["sd"] for n, p in zparams.items()})
        picked = cumulative_screen(scaled, RETURNS, config.irf.threshold)
        perm = None
        if config.irf.n_perm:
            perm = permutation_test(zpanel, lag, config.irf.horizon, config.irf.n_perm, config.seed, config.threads)

    j = scaled.index(RETURNS)
    screen = {
        "response": RETURNS,
        "threshold": config.irf.threshold,
        "horizon": config.irf.horizon,
        "selected": [
            {
                "impulse": name,
                "sign": sign,
                "cumulative": float(scaled.cumulative[-1, j, scaled.index(name)]),
                "day1": float(scaled.responses[1, j, scaled.index(name)]),
            }
            for name, sign in picked
        ],
        "all": {
            name: {
                "cumulative": float(scaled.cumulative[-1, j, i]),
                "day1": float(scaled.responses[1, j, i]),
                "day1_low": float(scaled.ci_low[1, j, i]),
                "day1_high": float(scaled.ci_high[1, j, i]),
            }
            for i, name in enumerate(scaled.variable_names)
            if i != j
        },
    }
    summary = {
        "ordering": list(zpanel.names),
        "analysis_start": str(zpanel.dates[0]),
        "analysis_end": str(manifest.analysis_end),
        "nobs": len(zpanel),
        "lag": lag,
        "seed": config.seed,
        "n_boot": config.irf.n_boot,
        "bootstrap_skipped": irfs.skipped,
    }
    write_json(out / "stationarity.json", reports)
    write_json(out / "zparams.json", zparams)
    write_json(out / "var_fit.json", fit.to_dict())
    if bic_scores is not None:
        write_json(out / "lag_selection.json", {"selected": lag, "bic": bic_scores})
    write_json(out / "residual_diagnostics.json", diagnostics)
    irf_doc = scaled.to_dict()
    irf_doc["units"] = "response-variable units per one-sd orthogonalized shock"
    write_json(out / "irf.json", irf_doc)
    write_rows(out / "irf.csv", ["impulse", "response", "h", "value", "lo", "hi"], scaled.tidy_rows())
    write_json(out / "screen.json", screen)
    if perm is not None:
        write_json(out / "permutation.json", perm)
    write_json(out / "analysis.json", summary)
    return screen


def design(config: RunConfig) -> list[StrategySpec]:
    with stage("design"):
        screen = read_json(config.output_dir / "analysis" / "screen.json")
        manifest = load_manifest(config.panel)
        specs = [
            StrategySpec(
                name=item["impulse"],
                kind="signal",
                signal_name=item["impulse"],
                sign=int(item["sign"]),
                extra_lag=manifest.extra_lag.get(item["impulse"], 0),
            )
            for item in screen["selected"]
        ]
        if specs:
            specs.append(StrategySpec("Combined", "combined", members=tuple(specs)))
        else:
            log.warning("screening selected no signals; no strategies designed")
    doc = {"strategies": [s.to_dict() for s in specs]}
    atomic_write_text(config.output_dir / "design" / "strategies.yaml", yaml.safe_dump(doc, sort_keys=False))
    return specs


def load_designed(config: RunConfig) -> list[StrategySpec]:
    path = config.output_dir / "design" / "strategies.yaml"
    if not path.exists():
        raise ConfigError(f"missing stage input {path}; run the design stage first")
    doc = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    return [StrategySpec.from_dict(d) for d in doc.get("strategies") or []]


def backtest(config: RunConfig) -> dict:
    out = config.output_dir / "backtest"
    with stage("backtest"):
        designed = load_designed(config)
        manifest, raw, _ = _load_raw_panel(config)
        price = raw[manifest.price]
        eval_price = price.between(manifest.analysis_end + DAY, manifest.leave_out_end)
        if len(eval_price) < 2:
            raise ConfigError("leave-out period must contain at least 2 trading days")
        signals = {s.name: s for s in raw.signals}
        s = config.strategies
        extra = [StrategySpec.from_dict(d) for d in s.extra]
        specs = designed + benchmark_specs(s.rsi_window, s.rsi_hi, s.rsi_lo) + extra
        names = [sp.name for sp in specs]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate strategy names {names}")
        costs = bt.CostModel.uniform(config.costs.c)

        ledgers, predictions = {}, {}
        for spec in specs:
            preds = predict(spec, price, signals, eval_price.dates)
            predictions[spec.name] = preds
            ledgers[spec.name] = bt.run_backtest(eval_price, preds, costs, "full")

        traders = bt.monte_carlo_random(eval_price, s.n_random, costs, config.seed, "full", config.threads)
        trader_sr = sharpe_many(traders.cr, config.evaluation.r_f)
        trader_r = (traders.cr[:, 1:] - traders.cr[:, :-1]) / traders.cr[:, :-1]

        sweeps = []
        for spec in specs:
            for c, profit in bt.cost_sweep(eval_price, predictions[spec.name], config.costs.sweep).items():
                sweeps.append((spec.name, "full", c, profit))
        focus = [sp for sp in designed if sp.kind == "combined"] or designed
        variants = []
        for spec in focus:
            for mode in config.costs.variants:
                for c, profit in bt.cost_sweep(eval_price, predictions[spec.name], config.costs.sweep, mode).items():
                    variants.append((spec.name, mode, c, profit))

        diag_for = tuple(sp.name for sp in designed)
        try:
            report = evaluate(ledgers, config.evaluation.r_f, config.evaluation.kde_bandwidth, diag_for)
        except DataError as exc:
            log.warning("return diagnostics skipped: %s", exc)
            report = evaluate(ledgers, config.evaluation.r_f, config.evaluation.kde_bandwidth)
        finite = trader_sr[np.isfinite(trader_sr)]
        report["random_traders"] = {
            "n_traders": s.n_random,
            "mean_sharpe_annualized": float(finite.mean()) if len(finite) else None,
            "mean_daily_return": float(trader_r.mean()),
            "mean_final_profit_pct": float(traders.final_profits.mean()),
            "sd_final_profit_pct": float(traders.final_profits.std(ddof=1)),
        }
        report["cost"] = config.costs.c
        report["leave_out"] = [str(eval_price.dates[0]), str(eval_price.dates[-1])]
        report["designed"] = [sp.name for sp in designed]

    for name, preds in predictions.items():
        atomic_write_text(out / "predictions" / f"{slug(name)}.csv", preds.to_csv())
        atomic_write_text(out / "ledgers" / f"{slug(name)}.csv", ledgers[name].to_csv())
    write_json(out / "eval.json", report)
    rows = table_rows(report)
    rows.append(
        ("Random", report["random_traders"]["mean_sharpe_annualized"], report["random_traders"]["mean_daily_return"] * 100)
    )
    write_rows(out / "table.csv", ["strategy", "sharpe_annualized", "mean_daily_return_pct"], rows)
    kde_rows = []
    for name, ledger in ledgers.items():
        grid, dens = kde(ledger.profit_pct, config.evaluation.kde_bandwidth)
        kde_rows += [(name, float(x), float(d)) for x, d in zip(grid, dens)]
    write_rows(out / "kde.csv", ["strategy", "profit_pct", "density"], kde_rows)
    names = list(ledgers)
    write_rows(
        out / "profits.csv",
        ["date"] + names,
        [[str(d)] + [float(ledgers[n].profit_pct[i]) for n in names] for i, d in enumerate(eval_price.dates)],
    )
    write_rows(out / "random_envelope.csv", ["date", "mean_profit_pct", "sd_profit_pct"], traders.to_rows())
    write_rows(out / "cost_sweep.csv", ["strategy", "mode", "cost", "final_profit_pct"], sweeps)
    write_rows(out / "variants.csv", ["strategy", "mode", "cost", "final_profit_pct"], variants)
    return report


def _fmt(v, digits=4) -> str:
    return "n/a" if v is None else f"{v:.{digits}f}"


def report(config: RunConfig) -> str:
    """Bundle stage outputs into report.md and report.json."""
    with stage("report"):
        root = config.output_dir
        analysis = read_json(root / "analysis" / "analysis.json")
        stationarity = read_json(root / "analysis" / "stationarity.json")
        screen = read_json(root / "analysis" / "screen.json")
        ev = read_json(root / "backtest" / "eval.json")
    lines = ["# Signal trading report", ""]
    lines += [
        f"Analysis period: {analysis['analysis_start']} to {analysis['analysis_end']} "
        f"({analysis['nobs']} observations), VAR lag {analysis['lag']}, "
        f"{analysis['n_boot']} bootstrap samples, seed {analysis['seed']}.",
        f"Variable ordering: {', '.join(analysis['ordering'])}.",
        "",
        "## Stationarity",
        "",
        "| signal | differences | ADF p | KPSS p | verdict |",
        "|---|---|---|---|---|",
    ]
    for name, r in stationarity.items():
        lines.append(f"| {name} | {r['differences_applied']} | {r['adf_p']:.4g} | {r['kpss_p']:.4g} | {r['verdict']} |")
    lines += ["", f"## Screened signals (|cumulative| >= {screen['threshold']})", ""]
    if screen["selected"]:
        for item in screen["selected"]:
            lines.append(f"- {item['impulse']}: sign {item['sign']:+d}, cumulative {item['cumulative']:.5f}")
    else:
        lines.append("- none")
    lines += [
        "",
        f"## Strategies over the leave-out period {ev['leave_out'][0]} to {ev['leave_out'][1]} (cost {ev['cost']})",
        "",
        "| strategy | SR (annualized) | mean daily return (%) | final profit (%) |",
        "|---|---|---|---|",
    ]
    for name, row in ev["strategies"].items():
        lines.append(
            f"| {name} | {_fmt(row['sharpe_annualized'])} | {_fmt(row['mean_daily_return'] * 100)} "
            f"| {_fmt(row['final_profit_pct'], 2)} |"
        )
    rt = ev["random_traders"]
    lines.append(
        f"| Random (mean of {rt['n_traders']}) | {_fmt(rt['mean_sharpe_annualized'])} "
        f"| {_fmt(rt['mean_daily_return'] * 100)} | {_fmt(rt['mean_final_profit_pct'], 2)} |"
    )
    text = "\n".join(lines) + "\n"
    atomic_write_text(root / "report.md", text)
    index = sorted(str(p.relative_to(root)) for p in root.rglob("*") if p.is_file() and p.name not in ("report.json",))
    write_json(root / "report.json", {"files": index, "analysis": analysis, "screen": screen["selected"]})
    return text


def sentiment(config: RunConfig) -> list[str]:
    """Corpus -> tweets/valence/polarization CSVs under ``signals/``."""
    st = config.sentiment
    with stage("sentiment"):
        if st.corpus is None or st.valence_lexicon is None or st.polarity_lexicon is None:
            raise ConfigError("sentiment needs corpus, valence_lexicon and polarity_lexicon")
        errors: list[str] = []
        val = Lexicon.load(st.valence_lexicon, "valence")
        pol = Lexicon.load(st.polarity_lexicon, "polarity")
        corpus = read_corpus(st.corpus, errors)
        built = build_signals(corpus, val, pol, (st.start, st.end), errors)
    out = config.output_dir / "signals"
    for sig in built:
        write_csv(sig, out / f"{sig.name}.csv")
    for e in errors[:20]:
        log.warning("%s", e)
    write_json(out / "sentiment.json", {"days": len(built[0]), "skipped_records": len(errors), "issues": errors})
    return errors


def run_all(config: RunConfig) -> None:
    analyze(config)
    design(config)
    backtest(config)
    report(config)
