"""Equal-weight combination of per-index equity curves.

Exchange calendars differ, so curves are aligned to the union of their
dates with per-component forward-fill. Each component is renormalized to
1.0 at the common start (the latest component start date): one unit of
capital per instrument, weights fixed, no rebalancing.
"""
from __future__ import annotations

import numpy as np

from .backtest import EquityCurve
from .errors import NoCommonStart, WeightSumInvalid
from . import metrics


def _forward_fill(dates, curve: EquityCurve) -> dict:
    if not curve.dates:
        raise NoCommonStart("component curve carries no dates")
    by_date = dict(zip(curve.dates, curve.values))
    out = {}
    last = None
    for d in dates:
        if d in by_date:
            last = by_date[d]
        if last is not None and d >= curve.dates[0]:
            out[d] = last
    return out


def combine(components: list[tuple[str, EquityCurve]], weights=None) -> EquityCurve:
    """Weighted average of the components' renormalized equity curves."""
    if not components:
        raise WeightSumInvalid("need at least one component")
    n = len(components)
    weights = [1.0 / n] * n if weights is None else list(weights)
    if len(weights) != n:
        raise WeightSumInvalid(f"{n} components but {len(weights)} weights")
    if abs(sum(weights) - 1.0) > 1e-12:
        raise WeightSumInvalid(f"weights sum to {sum(weights)!r}, not 1")

    all_dates = sorted({d for _, c in components for d in (c.dates or [])})
    if not all_dates:
        raise NoCommonStart("no component carries dates")
    start = max(c.dates[0] for _, c in components)
    eval_dates = [d for d in all_dates if d >= start]
    if not eval_dates or any(c.dates[-1] < start for _, c in components):
        raise NoCommonStart("component ranges never overlap the common start")

    filled = [_forward_fill(eval_dates, curve) for _, curve in components]
    base = [f[eval_dates[0]] for f in filled]
    values = np.zeros(len(eval_dates))
    for w, f, b in zip(weights, filled, base):
        values += w * np.array([f[d] for d in eval_dates]) / b
    rets = np.concatenate(([0.0], values[1:] / values[:-1] - 1.0))
    return EquityCurve(values, rets, np.zeros(len(values)), eval_dates)


def ensemble_report(components: list[tuple[str, EquityCurve]],
                    weights=None) -> tuple[EquityCurve, metrics.PerfMetrics]:
    """Combined curve plus its performance metrics."""
    curve = combine(components, weights)
    return curve, metrics.compute_all(curve.values)
