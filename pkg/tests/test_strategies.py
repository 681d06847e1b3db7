import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from signaltrader.errors import ConfigError, DataError
from signaltrader.signals import Signal
from signaltrader.strategies import (
    PredictionSeries,
    StrategySpec,
    benchmark_specs,
    predict,
    predict_buy_and_hold,
    predict_combined,
    predict_momentum,
    predict_random,
    predict_rsi,
    predict_signal,
    predict_upd,
)

S = Signal.from_values


def preds(values):
    return PredictionSeries(np.datetime64("2014-01-01") + np.arange(len(values)), values)


@pytest.mark.parametrize("values,sign,expected", [([3.0, 5.5], 1, 1), ([3.0, 5.5], -1, -1), ([4.0, 4.0], 1, 0)])
def test_signal_rule(values, sign, expected):
    out = predict_signal(S("y", values), sign)
    assert out.values.tolist() == [0, expected]


def test_extra_lag_shifts_availability():
    y = S("y", [1.0, 2.0, 1.0, 0.0])
    assert predict_signal(y).values.tolist() == [0, 1, -1, -1]
    assert predict_signal(y, extra_lag=1).values.tolist() == [0, 0, 1, -1]


@pytest.mark.parametrize("members,expected", [([1, 1, -1], 1), ([1, -1, 0], 0), ([-1, -1, -1], -1)])
def test_combined_vote(members, expected):
    out = predict_combined([preds([m]) for m in members])
    assert out.values.tolist() == [expected]


def test_combined_rejects_misaligned():
    a = preds([1, 1])
    b = PredictionSeries(a.dates + 1, [1, 1])
    with pytest.raises(DataError):
        predict_combined([a, b])


@pytest.mark.parametrize("p,expected", [([100.0, 110.0], 1), ([100.0, 90.0], -1), ([100.0, 100.0], 0)])
def test_momentum(p, expected):
    assert predict_momentum(S("p", p)).values[-1] == expected
    assert predict_upd(S("p", p)).values[-1] == -expected


@pytest.mark.parametrize(
    "moves,expected",
    [([1] * 5, -1), ([-1] * 5, 1), ([1, 1, 1, -1, -1], 0)],
)
def test_rsi_reversal(moves, expected):
    p = 100.0 + np.concatenate([[0.0], np.cumsum(moves)])
    assert predict_rsi(S("p", p)).values[-1] == expected


def test_rsi_needs_history():
    with pytest.raises(DataError):
        predict_rsi(S("p", [1.0, 2.0, 3.0]))
    with pytest.raises(ConfigError):
        predict_rsi(S("p", np.arange(1.0, 10.0)), window=1)


def test_random_reproducible():
    d = np.datetime64("2014-01-01") + np.arange(200)
    assert predict_random(d, 4) == predict_random(d, 4)
    assert predict_random(d, 4) != predict_random(d, 5)


def test_random_mean_near_zero():
    d = np.datetime64("2000-01-01") + np.arange(1_000_000)
    assert abs(predict_random(d, 0).values.mean()) < 0.004


def test_buy_and_hold():
    assert predict_buy_and_hold(np.datetime64("2014-01-01") + np.arange(4)).values.tolist() == [1, 0, 0, 0]


def test_prediction_values_checked():
    with pytest.raises(DataError):
        preds([2])


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=80, deadline=None)
@given(st.lists(finite, min_size=2, max_size=40))
def test_sign_flip_negates(values):
    y = S("y", values)
    assert predict_signal(y, -1) == -predict_signal(y, 1)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(1.0, 1e4), min_size=2, max_size=40))
def test_upd_negates_momentum(values):
    p = S("p", values)
    assert predict_upd(p) == -predict_momentum(p)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(1.0, 1e4), min_size=8, max_size=40), st.data())
def test_no_look_ahead(values, data):
    cut = data.draw(st.integers(7, len(values)))
    full, short = S("p", values), S("p", values[:cut])
    for fn in (predict_momentum, predict_rsi, lambda s: predict_signal(s, 1, 1)):
        assert np.array_equal(fn(full).values[:cut], fn(short).values)


def test_predict_dispatch_on_evaluation_dates():
    p = S("price", np.arange(1.0, 21.0))
    y = S("y", np.arange(20.0)[::-1])
    dates = p.dates[10:]
    spec = StrategySpec("y", "signal", signal_name="y", sign=1)
    out = predict(spec, p, {"y": y}, dates)
    assert np.array_equal(out.dates, dates) and (out.values == -1).all()
    combined = StrategySpec("Combined", "combined", members=(spec, StrategySpec("m", "momentum")))
    assert (predict(combined, p, {"y": y}, dates).values == 0).all()
    assert predict(StrategySpec("B", "buy_and_hold"), p, {}, dates).values.tolist()[:2] == [1, 0]


def test_spec_round_trip():
    spec = StrategySpec("Combined", "combined", members=(StrategySpec("a", "signal", signal_name="a", sign=-1),))
    assert StrategySpec.from_dict(spec.to_dict()) == spec
    assert [s.name for s in benchmark_specs()] == ["Momentum", "UPD", "RSI", "Buy and hold"]


@pytest.mark.parametrize(
    "kwargs",
    [dict(kind="bogus"), dict(kind="signal"), dict(kind="signal", signal_name="a", sign=0), dict(kind="combined")],
)
def test_bad_specs(kwargs):
    with pytest.raises(ConfigError):
        StrategySpec("x", **kwargs)
