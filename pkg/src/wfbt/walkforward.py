"""Non-anchored walk-forward window planning and prediction stitching.

Each walk is a contiguous train/valid/test index triple of fixed lengths;
walk k starts at k*step, so consecutive test windows tile the out-of-sample
region without gaps or overlaps. Trailing days that cannot fill a complete
test window are dropped and counted.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CoverageGap, SeriesTooShort


@dataclass(frozen=True)
class Walk:
    walk_index: int
    train: range
    valid: range
    test: range


@dataclass(frozen=True)
class WalkPlan:
    walks: list[Walk]
    total_len: int
    train_len: int
    valid_len: int
    test_len: int
    step: int
    dropped_tail: int

    @property
    def oos_start(self) -> int:
        return self.train_len + self.valid_len

    @property
    def oos_end(self) -> int:
        return self.walks[-1].test.stop


@dataclass(frozen=True)
class WalkPrediction:
    """Per-walk test-range output: predicted_close[i] forecasts close at
    test index test_indices[i], computed from data strictly before it."""

    walk_index: int
    test_indices: range
    predicted_close: np.ndarray
    actual_close: np.ndarray
    model: str
    failed: bool = False
    failure: str | None = None


def plan_walks(total_len: int, train_len: int = 1000, valid_len: int = 250,
               test_len: int = 250, step: int = 250) -> WalkPlan:
    window = train_len + valid_len + test_len
    if total_len < window:
        raise SeriesTooShort(
            f"need at least {window} observations, got {total_len}")
    walks = []
    k = 0
    while k * step + window <= total_len:
        start = k * step
        walks.append(Walk(
            walk_index=k,
            train=range(start, start + train_len),
            valid=range(start + train_len, start + train_len + valid_len),
            test=range(start + train_len + valid_len, start + window),
        ))
        k += 1
    dropped = total_len - walks[-1].test.stop
    return WalkPlan(walks, total_len, train_len, valid_len, test_len, step, dropped)


def stitch(predictions: list[WalkPrediction], plan: WalkPlan) -> WalkPrediction:
    """Concatenate per-walk test predictions into one continuous series.

    Failed walks contribute NaN predictions over their test range (explicit
    gap markers); a walk missing without a failure record is an error.
    """
    by_walk = {p.walk_index: p for p in predictions}
    preds = []
    actuals = []
    model = None
    for walk in plan.walks:
        p = by_walk.get(walk.walk_index)
        if p is None:
            raise CoverageGap(f"no prediction set for walk {walk.walk_index}")
        if p.test_indices != walk.test:
            raise CoverageGap(
                f"walk {walk.walk_index} covers {p.test_indices}, plan says {walk.test}")
        if p.failed:
            preds.append(np.full(len(walk.test), np.nan))
        else:
            preds.append(np.asarray(p.predicted_close, dtype=float))
        actuals.append(np.asarray(p.actual_close, dtype=float))
        model = model or p.model
    return WalkPrediction(
        walk_index=-1,
        test_indices=range(plan.walks[0].test.start, plan.walks[-1].test.stop),
        predicted_close=np.concatenate(preds),
        actual_close=np.concatenate(actuals),
        model=model or "",
    )
