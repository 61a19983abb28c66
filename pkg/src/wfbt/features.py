"""Feature assembly and min-max scaling for the sequence models.

Columns are assembled in a fixed order (close, volatility, volume, and the
ARIMA residual in hybrid mode). Scalers are fit on the training rows only
and map into [-0.9, +0.9] so the tanh output head never needs to saturate;
a constant column gets a degenerate scaler that pins it to the midpoint.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentError
from .lstm import SequenceDataset
from .market_data import PriceSeries

TARGET_LO = -0.9
TARGET_HI = 0.9

BASE_COLUMNS = ["close", "volatility", "volume"]
RESIDUAL_COLUMN = "arima_residual"


@dataclass(frozen=True)
class FeatureScaler:
    col_min: float
    col_max: float
    target_lo: float = TARGET_LO
    target_hi: float = TARGET_HI
    degenerate: bool = False

    @classmethod
    def fit(cls, values, target_lo: float = TARGET_LO,
            target_hi: float = TARGET_HI) -> "FeatureScaler":
        v = np.asarray(values, dtype=float)
        lo, hi = float(np.min(v)), float(np.max(v))
        return cls(lo, hi, target_lo, target_hi, degenerate=not hi > lo)

    def transform(self, x):
        x = np.asarray(x, dtype=float)
        if self.degenerate:
            return np.full_like(x, (self.target_lo + self.target_hi) / 2.0)
        scale = (self.target_hi - self.target_lo) / (self.col_max - self.col_min)
        return self.target_lo + (x - self.col_min) * scale

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        if self.degenerate:
            return np.full_like(y, self.col_min)
        scale = (self.col_max - self.col_min) / (self.target_hi - self.target_lo)
        return self.col_min + (y - self.target_lo) * scale


@dataclass(frozen=True)
class FeatureMatrix:
    columns: list[str]
    values: np.ndarray  # (n_rows, n_cols), raw units
    scalers: list[FeatureScaler]
    fit_range: range

    def __post_init__(self):
        self.values.flags.writeable = False

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def scaled(self) -> np.ndarray:
        out = np.empty_like(self.values)
        for j, scaler in enumerate(self.scalers):
            out[:, j] = scaler.transform(self.values[:, j])
        return out

    @property
    def close_scaler(self) -> FeatureScaler:
        return self.scalers[self.columns.index("close")]


def build_features(series: PriceSeries, residuals=None,
                   fit_range: range | None = None) -> FeatureMatrix:
    """Assemble the model input matrix from a price series.

    residuals (hybrid mode) must align 1:1 with the series bars. Leading
    undefined volatility positions are backfilled from the first defined
    value; these sit inside the first training window only.
    """
    n = len(series)
    fit_range = fit_range if fit_range is not None else range(n)
    vol = series.volatility.copy()
    finite = np.isfinite(vol)
    if finite.any():
        first = int(np.argmax(finite))
        vol[:first] = vol[first]
        if not np.isfinite(vol).all():
            raise AlignmentError("volatility column has interior gaps")
    else:
        vol[:] = 0.0

    columns = list(BASE_COLUMNS)
    cols = [series.close, vol, series.volume]
    if residuals is not None:
        resid = np.asarray(residuals, dtype=float)
        if resid.shape != (n,):
            raise AlignmentError(
                f"residuals length {resid.size} does not match {n} bars")
        columns.append(RESIDUAL_COLUMN)
        cols.append(resid)
    values = np.column_stack(cols)
    scalers = [FeatureScaler.fit(values[fit_range, j]) for j in range(len(columns))]
    return FeatureMatrix(columns, values, scalers, fit_range)


def make_dataset(matrix: FeatureMatrix, seq_len: int, target_range: range) -> SequenceDataset:
    """Windows ending at j-1 predicting the scaled close at bar j, for every
    j in target_range with a full window available."""
    scaled = matrix.scaled()
    close_col = matrix.columns.index("close")
    targets_j = [j for j in target_range if j - seq_len >= 0 and j < matrix.n_rows]
    inputs = np.stack([scaled[j - seq_len:j, :] for j in targets_j]) \
        if targets_j else np.empty((0, seq_len, len(matrix.columns)))
    targets = scaled[targets_j, close_col] if targets_j else np.empty(0)
    return SequenceDataset(inputs, targets, np.asarray(targets_j, dtype=int), seq_len)
