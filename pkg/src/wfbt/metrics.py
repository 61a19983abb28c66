"""Risk-adjusted performance metrics for strategy return/equity series.

All six metrics follow the percent conventions of the reference tables:
ARC and ASD are annualized percents, MD is a percent of the running peak,
MLD is in years (252 observations per year), and the information ratios
are formed from the percent-unit inputs (IR* = ARC/ASD*100).

Degenerate denominators (flat equity: ASD=0 or MD=0) produce a metric of
exactly 0 with a `degenerate` flag rather than an error, because trial
selection in the tuning module compares flat-equity candidates and relies
on the exact-zero convention.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, RuinReturn, SeriesTooShort

TRADING_DAYS_PER_YEAR = 252


@dataclass(frozen=True)
class MetricsConfig:
    periods_per_year: int = TRADING_DAYS_PER_YEAR


@dataclass(frozen=True)
class PerfMetrics:
    """The six headline metrics, in the table units (percents / years)."""

    arc: float
    asd: float
    md: float
    mld: float
    ir_star: float
    ir_double_star: float
    degenerate: bool = False

    def as_row(self) -> list[float]:
        return [self.arc, self.asd, self.md, self.mld, self.ir_star, self.ir_double_star]


@dataclass(frozen=True)
class DrawdownInfo:
    md: float
    peak_index: int
    trough_index: int
    recovery_index: int | None


def arc(returns, config: MetricsConfig = MetricsConfig()) -> float:
    """Annualized compounded return, in percent."""
    r = np.asarray(returns, dtype=float)
    if r.size == 0:
        raise EmptyInput("arc needs at least one return")
    if np.any(r <= -1.0):
        raise RuinReturn("arc undefined for returns <= -100%")
    growth = float(np.prod(1.0 + r))
    return (growth ** (config.periods_per_year / r.size) - 1.0) * 100.0


def asd(returns, config: MetricsConfig = MetricsConfig()) -> float:
    """Annualized standard deviation of returns, in percent."""
    r = np.asarray(returns, dtype=float)
    if r.size < 2:
        raise SeriesTooShort("asd needs at least two returns")
    return float(np.sqrt(config.periods_per_year) * np.std(r, ddof=1) * 100.0)


def max_drawdown(equity) -> DrawdownInfo:
    """Largest peak-to-trough decline of an equity curve, in percent.

    Reports the earliest episode attaining the maximum: peak_index is the
    running-peak position, trough_index the first position realizing the
    full drawdown, recovery_index the first later position at or above the
    peak (None if never recovered).
    """
    values = np.asarray(equity, dtype=float)
    if values.size == 0:
        raise EmptyInput("max_drawdown needs a non-empty curve")
    peaks = np.maximum.accumulate(values)
    dd = (peaks - values) / peaks
    trough = int(np.argmax(dd))  # first index attaining the max
    md = float(dd[trough] * 100.0)
    if md == 0.0:
        return DrawdownInfo(0.0, 0, 0, 0)
    peak = int(np.argmax(values[: trough + 1]))
    after = np.nonzero(values[trough:] >= peaks[trough])[0]
    recovery = int(trough + after[0]) if after.size else None
    return DrawdownInfo(md, peak, trough, recovery)


def max_loss_duration(equity, config: MetricsConfig = MetricsConfig()) -> float:
    """Longest peak-to-recovery span, in years.

    An episode opens when the curve drops below its running peak and closes
    at the first index back at or above that peak; an open trailing episode
    counts through the final observation.
    """
    values = np.asarray(equity, dtype=float)
    if values.size == 0:
        raise EmptyInput("max_loss_duration needs a non-empty curve")
    longest = 0
    peak_idx = 0
    peak_val = values[0]
    below = False
    for i in range(1, values.size):
        if values[i] >= peak_val:
            if below:  # recovery closes the episode at i
                longest = max(longest, i - peak_idx)
            peak_idx, peak_val = i, values[i]
            below = False
        else:
            below = True
            longest = max(longest, i - peak_idx)  # open episode through i
    return longest / config.periods_per_year


def ir_star(arc_pct: float, asd_pct: float) -> tuple[float, bool]:
    """ARC over ASD, scaled by 100 to the tables' percent convention.

    Returns (value, degenerate); a zero ASD yields (0, True).
    """
    if asd_pct == 0.0:
        return 0.0, True
    return float(arc_pct / asd_pct * 100.0), False


def ir_double_star(ir_star_pct: float, arc_pct: float, md_pct: float) -> tuple[float, bool]:
    """Drawdown-penalized information ratio; sign follows ARC.

    Returns (value, degenerate); a zero MD yields (0, True).
    """
    if md_pct == 0.0:
        return 0.0, True
    return float(ir_star_pct * arc_pct * np.sign(arc_pct) / md_pct), False


def compute_all(equity, config: MetricsConfig = MetricsConfig()) -> PerfMetrics:
    """All six metrics from one equity curve (values, starting at 1.0)."""
    values = np.asarray(equity, dtype=float)
    if values.size < 2:
        raise EmptyInput("compute_all needs at least two equity values")
    returns = values[1:] / values[:-1] - 1.0
    arc_v = arc(returns, config)
    asd_v = asd(returns, config)
    dd = max_drawdown(values)
    mld_v = max_loss_duration(values, config)
    irs, deg1 = ir_star(arc_v, asd_v)
    irss, deg2 = ir_double_star(irs, arc_v, dd.md)
    return PerfMetrics(arc_v, asd_v, dd.md, mld_v, irs, irss, degenerate=deg1 or deg2)


METRICS_COLUMNS = ["ARC", "ASD", "MD", "MLD", "IR*", "IR**"]
