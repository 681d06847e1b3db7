"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import json
import math
import time

import numpy as np
import pytest

from acceptance_log import record
from conftest import make_run
from reference import reference_ledger
from signaltrader import pipeline
from signaltrader.backtest import CostModel, cost_sweep, run_backtest
from signaltrader.cli import main
from signaltrader.config import load_config
from signaltrader.evaluation import sharpe, wilcoxon_rank_sum
from signaltrader.irf import bootstrap_irf, compute_irf
from signaltrader.preprocess import adf_test, kpss_test
from signaltrader.sentiment import DocBatch, Lexicon, daily_polarization, daily_valence
from signaltrader.synthetic import simulate_var
from signaltrader.var import VarFit, fit_var, select_lag


def test_criterion_1_trading_simulation_fidelity():
    start = time.perf_counter()
    a = run_backtest([100.0, 110.0, 99.0], [1, -1])
    b = run_backtest([100.0, 90.0], [-1])
    c = run_backtest([100.0, 120.0, 80.0, 95.0], [0, 0, 0, 0])
    hand_ok = (
        abs(a.cr[1] / 1.1 - 1) <= 1e-12
        and abs(a.cr[2] / 1.1 - 1) <= 1e-12
        and abs(b.cr[1] / 1.1 - 1) <= 1e-12
        and c.cr.tolist() == [1.0] * 4
    )
    rng = np.random.default_rng(1)
    mismatches = checked = 0
    while checked < 1000:
        T = int(rng.integers(2, 51))
        prices = (100.0 * np.exp(np.cumsum(rng.normal(0, 0.05, T)))).tolist()
        preds = rng.integers(-1, 2, T).tolist()
        cost = float(rng.choice([0.0, rng.uniform(0, 0.01)]))
        mode = str(rng.choice(["full", "long_only", "short_only", "forced_close"]))
        actions, usd, btc, cr = reference_ledger(prices, preds, cost, cost, mode)
        ledger = run_backtest(prices, preds, CostModel.uniform(cost), mode)
        same = (
            list(ledger.action) == actions
            and ledger.n_usd.tolist() == usd
            and ledger.n_btc.tolist() == btc
            and ledger.cr.tolist() == cr
        )
        mismatches += not same
        checked += 1
    elapsed = time.perf_counter() - start
    ok = hand_ok and mismatches == 0 and elapsed < 10
    record(1, "trading simulation fidelity", ok, f"hand traces {hand_ok}, {mismatches}/1000 mismatches, {elapsed:.1f}s")
    assert ok


def test_criterion_2_var_recovery():
    start = time.perf_counter()
    phi1 = np.array([[0.5, 0.1], [0.0, 0.3]])
    phi2 = (np.array([[0.3, 0.0], [0.1, 0.2]]), np.array([[0.3, 0.0], [0.0, 0.25]]))
    err1 = np.max(np.abs(fit_var(simulate_var([phi1], 5000, np.random.default_rng(11)), 1).phi[0] - phi1))
    fit2 = fit_var(simulate_var(phi2, 5000, np.random.default_rng(12)), 2)
    err2 = max(np.max(np.abs(f - t)) for f, t in zip(fit2.phi, phi2))
    hits = {1: 0, 2: 0}
    for seed in range(100):
        hits[1] += select_lag(simulate_var([phi1], 5000, np.random.default_rng([seed, 1])), 4)[0] == 1
        hits[2] += select_lag(simulate_var(phi2, 5000, np.random.default_rng([seed, 2])), 4)[0] == 2
    elapsed = time.perf_counter() - start
    ok = err1 <= 0.05 and err2 <= 0.05 and hits[1] >= 90 and hits[2] >= 90 and elapsed < 120
    record(
        2,
        "VAR recovery",
        ok,
        f"max |phi error| {err1:.4f} (VAR1) {err2:.4f} (VAR2), BIC correct {hits[1]}/100 (VAR1) "
        f"{hits[2]}/100 (VAR2), {elapsed:.1f}s",
    )
    assert ok


def test_criterion_3_irf_correctness():
    start = time.perf_counter()
    diag = VarFit((np.diag([0.5, 0.3]),), np.zeros(2), np.zeros(2), np.zeros((5, 2)), np.eye(2), 1, ("a", "b"))
    irf = compute_irf(diag, 10)
    closed_err = float(np.max(np.abs(irf.pair("a", "a") - 0.5 ** np.arange(11))))

    phi = np.array([[0.5, 0.1], [0.0, 0.3]])
    truth = compute_irf(VarFit((phi,), np.zeros(2), np.zeros(2), np.zeros((5, 2)), np.eye(2), 1, ("a", "b")), 10)
    covered = total = 0
    for seed in range(50):
        y = simulate_var([phi], 2000, np.random.default_rng([seed, 3]))
        boot = bootstrap_irf(fit_var(y, 1), y, 10, 1000, seed=seed)
        inside = (boot.ci_low <= truth.responses) & (truth.responses <= boot.ci_high)
        covered += int(inside.sum())
        total += inside.size
    elapsed = time.perf_counter() - start
    coverage = covered / total
    ok = closed_err <= 1e-10 and coverage >= 0.90 and elapsed < 600
    record(3, "IRF correctness", ok, f"closed-form error {closed_err:.1e}, band coverage {coverage:.3f}, {elapsed:.1f}s")
    assert ok


def test_criterion_4_plant_and_recover(tmp_path):
    start = time.perf_counter()
    sign_ok = beats_random = 0
    seeds = range(20)
    for seed in seeds:
        cfg = make_run(tmp_path / f"s{seed}", seed=seed, n_days=1400, n_boot=1000, n_perm=0, n_random=1000)
        config = load_config(cfg)
        screen = pipeline.analyze(config)
        picked = {item["impulse"]: item["sign"] for item in screen["selected"]}
        if picked.get("polarization") != 1:
            continue
        sign_ok += 1
        pipeline.design(config)
        report = pipeline.backtest(config)
        sr = report["strategies"]["polarization"]["sharpe_annualized"]
        beats_random += sr > report["random_traders"]["mean_sharpe_annualized"]
    elapsed = time.perf_counter() - start
    n = len(seeds)
    ok = sign_ok >= 0.95 * n and beats_random >= 0.95 * n and elapsed < 300
    record(
        4,
        "plant and recover",
        ok,
        f"correct sign {sign_ok}/{n}, Sharpe above random mean {beats_random}/{n}, {elapsed:.1f}s",
    )
    assert ok


def test_criterion_5_cost_monotonicity():
    rng = np.random.default_rng(5)
    violations = 0
    for _ in range(200):
        T = int(rng.integers(2, 120))
        prices = 100.0 * np.exp(np.cumsum(rng.normal(0, 0.03, T)))
        preds = rng.integers(-1, 2, T)
        mode = str(rng.choice(["full", "long_only", "short_only", "forced_close"]))
        profits = list(cost_sweep(prices, preds, mode=mode).values())
        violations += sum(b > a for a, b in zip(profits, profits[1:]))
    ok = violations == 0
    record(5, "cost monotonicity", ok, f"{violations} violations over 200 instances")
    assert ok


def test_criterion_6_statistical_kernels():
    adf_noise = adf_walk_kept = kpss_walk = kpss_noise_kept = 0
    for seed in range(1000):
        e = np.random.default_rng([seed, 6]).standard_normal(1000)
        w = np.cumsum(e)
        adf_noise += adf_test(e)[1] < 0.05
        adf_walk_kept += adf_test(w)[1] >= 0.05
        kpss_walk += kpss_test(w)[1] < 0.1
        kpss_noise_kept += kpss_test(e)[1] >= 0.1
    w_stat, w_p = wilcoxon_rank_sum([1, 2, 3], [4, 5, 6])
    sr = sharpe(np.array([1.0, 1.01, 1.01 * 1.03]))[0]
    ok = (
        adf_noise >= 990
        and kpss_walk >= 950
        and adf_walk_kept >= 900
        and kpss_noise_kept >= 850
        and w_p == 0.1
        and abs(sr - 27.02) <= 1e-2
    )
    record(
        6,
        "statistical kernels",
        ok,
        f"ADF rejects noise {adf_noise}/1000, keeps walks {adf_walk_kept}/1000; KPSS rejects walks "
        f"{kpss_walk}/1000, keeps noise {kpss_noise_kept}/1000; Wilcoxon p {w_p!r}, SR {sr:.4f}",
    )
    assert ok


def test_criterion_7_sentiment_formulas():
    val = Lexicon.valence({"good": 7.0, "bad": 2.0})
    pol = Lexicon.polarity(["good"], ["bad"])
    day = "2013-04-01"
    v = daily_valence(DocBatch(day, [("good",) * 3, ("bad",)]), val)
    p1 = daily_polarization(DocBatch(day, [("good", "good"), ("bad",) * 5] + [()] * 8), pol)
    p2 = daily_polarization(DocBatch(day, [("good",), ("good",), ("good",)]), pol)
    p3 = daily_polarization(DocBatch(day, [("good",), ("good",), ("good", "bad"), ("good",)]), pol)
    examples_ok = (
        abs(v - 5.75) <= 1e-12
        and abs(p1 - math.sqrt(0.1)) <= 1e-12
        and abs(p1 - 0.3162) < 1e-4
        and p2 == 0.0
        and abs(p3 - 0.5) <= 1e-12
    )
    swapped = Lexicon.polarity(["bad"], ["good"])
    rng = np.random.default_rng(7)
    vocab = np.array(["good", "bad", "meh", "btc"])
    props_ok = True
    for _ in range(500):
        docs = [tuple(rng.choice(vocab, rng.integers(0, 8))) for _ in range(rng.integers(1, 15))]
        batch = DocBatch(day, docs)
        props_ok &= daily_polarization(batch, pol) == daily_polarization(batch, swapped)
        no_bad = DocBatch(day, [tuple(t for t in d if t != "bad") for d in docs])
        props_ok &= daily_polarization(no_bad, pol) == 0.0
    ok = bool(examples_ok and props_ok)
    record(7, "sentiment formulas", ok, f"examples {examples_ok}, properties over 500 corpora {bool(props_ok)}")
    assert ok


def tree(root):
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_criterion_8_determinism(tmp_path):
    cfg = make_run(tmp_path, seed=8, n_days=1000, n_boot=1000, n_perm=200, n_random=2000)
    runs = {}
    for name, threads in (("a", "1"), ("b", "1"), ("c", "4")):
        assert main(["run", "--config", str(cfg), "--threads", threads, "--out", str(tmp_path / name)]) == 0
        runs[name] = tree(tmp_path / name)
    same_repeat = runs["a"] == runs["b"]
    same_threads = runs["a"] == runs["c"]
    ok = same_repeat and same_threads and len(runs["a"]) > 20
    record(
        8,
        "determinism",
        ok,
        f"{len(runs['a'])} files; repeat identical {same_repeat}, 1 vs 4 threads identical {same_threads}",
    )
    assert ok
