import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wfbt.backtest import (EquityCurve, SignalSeries, StrategyMode, buy_and_hold,
                           curve_from_predictions, equity_curve, signals)
from wfbt.errors import LengthMismatch, SeriesTooShort

LO = StrategyMode.LONG_ONLY
LS = StrategyMode.LONG_SHORT


class TestSignals:
    def test_long_when_forecast_above(self):
        assert signals([101.0], [100.0], LO).positions[0] == 1
        assert signals([101.0], [100.0], LS).positions[0] == 1

    def test_short_side(self):
        assert signals([99.0], [100.0], LO).positions[0] == 0
        assert signals([99.0], [100.0], LS).positions[0] == -1

    def test_tie_takes_non_long_branch(self):
        assert signals([100.0], [100.0], LO).positions[0] == 0
        assert signals([100.0], [100.0], LS).positions[0] == -1

    def test_nan_gap_goes_flat(self):
        pos = signals([np.nan, 101.0], [100.0, 100.0], LS).positions
        assert pos[0] == 0 and pos[1] == 1

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            signals([1.0, 2.0], [1.0], LO)


class TestEquityCurve:
    def test_flat_positions_flat_curve(self):
        sig = SignalSeries(np.zeros(5), LO)
        curve = equity_curve(sig, np.linspace(100, 110, 6))
        assert np.all(curve.values == 1.0)
        assert np.all(curve.cost_paid == 0.0)

    def test_always_long_with_entry_cost(self):
        sig = SignalSeries(np.ones(2), LO)
        curve = equity_curve(sig, [100.0, 101.0, 102.0])
        assert curve.values[0] == 1.0
        assert curve.values[1] == pytest.approx(1.009, abs=1e-12)
        expected_final = 1.009 * (1 + (102 / 101 - 1))
        assert curve.values[2] == pytest.approx(expected_final, abs=1e-12)

    def test_flip_charges_double_cost(self):
        sig = SignalSeries(np.array([1.0, -1.0]), LS)
        curve = equity_curve(sig, [100.0, 100.0, 100.0])
        assert curve.cost_paid[1] == pytest.approx(0.001, abs=1e-15)
        assert curve.cost_paid[2] == pytest.approx(0.002, abs=1e-15)

    def test_cost_iff_position_change(self, rng):
        pos = rng.choice([-1.0, 1.0], size=60)
        closes = 100 * np.cumprod(1 + rng.normal(0, 0.01, 61))
        curve = equity_curve(SignalSeries(pos, LS), closes, cost_rate=0.001)
        prev = np.concatenate(([0.0], pos[:-1]))
        assert np.sum(curve.cost_paid) == pytest.approx(
            0.001 * np.sum(np.abs(pos - prev)), rel=1e-12)
        changed = np.concatenate(([False], pos != prev))
        assert np.all((curve.cost_paid > 0) == changed)

    def test_zero_cost_long_short_equals_position_times_returns(self, rng):
        pos = rng.choice([-1.0, 1.0], size=100)
        closes = 100 * np.cumprod(1 + rng.normal(0, 0.02, 101))
        curve = equity_curve(SignalSeries(pos, LS), closes, cost_rate=0.0)
        bench = closes[1:] / closes[:-1] - 1
        assert curve.strategy_returns[1:] == pytest.approx(pos * bench, rel=1e-12)

    def test_reversed_predictions_negate_precost_returns(self, rng):
        closes = 100 * np.cumprod(1 + rng.normal(0, 0.01, 41))
        preds = closes[1:] * (1 + rng.normal(0, 0.005, 40))
        sig = signals(preds, closes[:-1], LS)
        # reverse: anything long becomes short and vice versa
        flipped = signals(2 * closes[:-1] - preds, closes[:-1], LS)
        a = equity_curve(sig, closes, cost_rate=0.0)
        b = equity_curve(flipped, closes, cost_rate=0.0)
        # ties map to -1 both ways; exclude them
        ok = preds != closes[:-1]
        assert a.strategy_returns[1:][ok] == pytest.approx(
            -b.strategy_returns[1:][ok], rel=1e-12)

    @given(st.integers(min_value=0, max_value=2**31 - 1))
    def test_curve_strictly_positive(self, seed):
        r = np.random.default_rng(seed)
        pos = r.choice([-1.0, 0.0, 1.0], size=30)
        closes = 100 * np.cumprod(1 + r.uniform(-0.2, 0.2, 31))
        curve = equity_curve(SignalSeries(pos, LS), closes)
        assert np.all(curve.values > 0)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            equity_curve(SignalSeries(np.ones(3), LO), [1.0, 2.0, 3.0])


class TestBuyAndHold:
    def test_two_closes(self):
        curve = buy_and_hold([100.0, 110.0])
        # additive entry-cost convention: R - cost on the first traded day
        assert curve.values[-1] == pytest.approx(1 + 0.10 - 0.001, abs=1e-12)

    def test_constant_closes(self):
        curve = buy_and_hold([100.0] * 5)
        assert np.all(curve.values[1:] == pytest.approx(0.999, abs=1e-15))

    def test_equals_always_long_strategy(self, rng):
        closes = 100 * np.cumprod(1 + rng.normal(0, 0.01, 50))
        lo = equity_curve(SignalSeries(np.ones(49), LO), closes)
        bh = buy_and_hold(closes)
        assert bh.values == pytest.approx(lo.values, rel=1e-15)

    def test_too_short(self):
        with pytest.raises(SeriesTooShort):
            buy_and_hold([100.0])


class TestCurveFromPredictions:
    def test_alignment(self, rng):
        closes = 100 * np.cumprod(1 + rng.normal(0, 0.01, 30))
        idx = range(10, 20)
        preds = closes[10:20] * 1.001
        curve, sig = curve_from_predictions(idx, preds, closes, LO, cost_rate=0.0)
        assert curve.values.size == 11  # anchor day + 10 targets
        # prediction above actual close means position follows pred vs close[t-1]
        expected_pos = (preds > closes[9:19]).astype(float)
        assert np.array_equal(sig.positions, expected_pos)

    def test_non_contiguous_rejected(self):
        with pytest.raises(LengthMismatch):
            curve_from_predictions([1, 3], [1.0, 1.0], np.ones(10), LO)
