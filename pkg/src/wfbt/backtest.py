"""Signal generation and cost-aware equity-curve simulation.

Timing convention: the model's forecast of tomorrow's close is compared to
today's close; the resulting position is taken at today's close and earns
tomorrow's close-to-close return. Position changes pay a proportional cost
(a full long-to-short flip is two transactions, so 2x the rate), charged
against the day the new position's first return is realized. The initial
entry from flat is charged.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, SeriesTooShort

DEFAULT_COST_RATE = 0.001


class StrategyMode(enum.Enum):
    LONG_ONLY = "LongOnly"
    LONG_SHORT = "LongShort"


@dataclass(frozen=True)
class SignalSeries:
    positions: np.ndarray  # values in {-1, 0, +1}
    mode: StrategyMode
    dates: list | None = None


@dataclass(frozen=True)
class EquityCurve:
    values: np.ndarray  # starts at 1.0
    strategy_returns: np.ndarray  # [0] = 0.0 by convention
    cost_paid: np.ndarray
    dates: list | None = None

    def __post_init__(self):
        for arr in (self.values, self.strategy_returns, self.cost_paid):
            arr.flags.writeable = False


def signals(predictions, closes, mode: StrategyMode, dates=None) -> SignalSeries:
    """Positions from next-day price forecasts.

    predictions[t] is the forecast of close[t+1]; a forecast above close[t]
    goes long, anything else (including an exact tie) takes the non-long
    branch. NaN predictions mark coverage gaps and map to flat.
    """
    pred = np.asarray(predictions, dtype=float)
    px = np.asarray(closes, dtype=float)
    if pred.shape != px.shape:
        raise LengthMismatch(f"predictions vs closes: {pred.size} vs {px.size}")
    short_side = 0.0 if mode is StrategyMode.LONG_ONLY else -1.0
    pos = np.where(pred > px, 1.0, short_side)
    pos[np.isnan(pred)] = 0.0
    return SignalSeries(pos, mode, dates)


def equity_curve(sig: SignalSeries, closes, cost_rate: float = DEFAULT_COST_RATE,
                 dates=None) -> EquityCurve:
    """Compound the positions over close-to-close returns, net of costs.

    closes must cover the signal days plus one trailing observation; the
    curve has len(closes) points with values[0] = 1.0 on the first day.
    """
    px = np.asarray(closes, dtype=float)
    pos = sig.positions
    if px.size != pos.size + 1:
        raise LengthMismatch(
            f"closes must be one longer than positions: {px.size} vs {pos.size}")
    rets = px[1:] / px[:-1] - 1.0
    prev = np.concatenate(([0.0], pos[:-1]))
    cost = cost_rate * np.abs(pos - prev)
    strat = pos * rets - cost
    values = np.concatenate(([1.0], np.cumprod(1.0 + strat)))
    return EquityCurve(values,
                       np.concatenate(([0.0], strat)),
                       np.concatenate(([0.0], cost)),
                       dates)


def buy_and_hold(closes, cost_rate: float = DEFAULT_COST_RATE, dates=None) -> EquityCurve:
    """Benchmark: long from the first day, single entry cost."""
    px = np.asarray(closes, dtype=float)
    if px.size < 2:
        raise SeriesTooShort("buy_and_hold needs at least two closes")
    sig = SignalSeries(np.ones(px.size - 1), StrategyMode.LONG_ONLY)
    return equity_curve(sig, px, cost_rate, dates)


def curve_from_predictions(target_indices, predictions, closes, mode: StrategyMode,
                           cost_rate: float = DEFAULT_COST_RATE,
                           dates=None) -> tuple[EquityCurve, SignalSeries]:
    """Equity curve for forecasts over a contiguous index range.

    predictions[i] forecasts closes[target_indices[i]]; positions are taken
    one day earlier, so the curve spans [first target - 1, last target].
    """
    idx = np.asarray(target_indices, dtype=int)
    if idx.size == 0:
        raise LengthMismatch("no predictions to backtest")
    if not np.all(np.diff(idx) == 1):
        raise LengthMismatch("prediction target indices must be contiguous")
    lo, hi = int(idx[0]), int(idx[-1])
    if lo < 1 or hi >= len(closes):
        raise LengthMismatch("prediction targets fall outside the close series")
    px = np.asarray(closes, dtype=float)
    curve_dates = None if dates is None else list(dates[lo - 1:hi + 1])
    sig = signals(predictions, px[lo - 1:hi], mode,
                  None if dates is None else list(dates[lo - 1:hi]))
    return equity_curve(sig, px[lo - 1:hi + 1], cost_rate, curve_dates), sig
