"""OHLCV CSV ingestion, cleaning, and derived return/volatility columns.

The close column drives everything downstream; rows whose close is missing,
non-numeric, or non-positive are dropped and counted. Open/high/low/adj
fall back to the close when absent or unparseable (they are retained but
unused by the models), and missing volume becomes 0 with a warning count
rather than a dropped row.
"""
from __future__ import annotations

import csv
import datetime as dt
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DuplicateDate, EmptyAfterCleaning, MissingColumn, SeriesTooShort

TRADING_DAYS_PER_YEAR = 252
DEFAULT_VOL_WINDOW = 21

#: logical field -> default Yahoo Finance column name
DEFAULT_SCHEMA = {
    "date": "Date",
    "open": "Open",
    "high": "High",
    "low": "Low",
    "close": "Close",
    "adj_close": "Adj Close",
    "volume": "Volume",
    "volatility": "Volatility",  # optional pre-supplied column (e.g. VIX)
}

CANONICAL_HEADER = ["Date", "Open", "High", "Low", "Close", "Adj Close", "Volume"]


class VolatilitySource(enum.Enum):
    EXTERNAL = "External"
    REALIZED_VOL_21 = "RealizedVol21"


@dataclass(frozen=True)
class Bar:
    date: dt.date
    open: float
    high: float
    low: float
    close: float
    adj_close: float
    volume: float


@dataclass(frozen=True)
class PriceSeries:
    """Date-aligned closes with derived returns and volatility columns.

    returns[i] is the fractional change from close[i] to close[i+1], so the
    array is one shorter than the bars. volatility is bar-aligned and NaN
    where the rolling window is not yet filled.
    """

    dates: list[dt.date]
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    adj_close: np.ndarray
    volume: np.ndarray
    returns: np.ndarray
    volatility: np.ndarray
    volatility_source: VolatilitySource
    dropped_count: int = 0
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        for arr in (self.open, self.high, self.low, self.close,
                    self.adj_close, self.volume, self.returns, self.volatility):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return len(self.dates)

    def bar(self, i: int) -> Bar:
        return Bar(self.dates[i], self.open[i], self.high[i], self.low[i],
                   self.close[i], self.adj_close[i], self.volume[i])


@dataclass(frozen=True)
class DescriptiveStats:
    count: int
    mean: float
    std: float
    min: float
    q25: float
    median: float
    q75: float
    max: float

    def as_row(self) -> list[float]:
        return [self.count, self.mean, self.std, self.min,
                self.q25, self.median, self.q75, self.max]


def compute_returns(closes: np.ndarray) -> np.ndarray:
    closes = np.asarray(closes, dtype=float)
    return np.diff(closes) / closes[:-1]


def realized_volatility(series: PriceSeries, window: int = DEFAULT_VOL_WINDOW) -> np.ndarray:
    """Annualized rolling root-mean-square of returns.

    Output is aligned to return indices; positions before the window fills
    (t < window-1) are NaN.
    """
    r = series.returns
    if r.size < window:
        raise SeriesTooShort(f"need at least {window} returns, got {r.size}")
    csum = np.concatenate(([0.0], np.cumsum(r * r)))
    out = np.full(r.size, np.nan)
    t = np.arange(window - 1, r.size)
    out[t] = np.sqrt((csum[t + 1] - csum[t + 1 - window]) / window) * math.sqrt(
        TRADING_DAYS_PER_YEAR)
    return out


def descriptive_stats(series: PriceSeries) -> DescriptiveStats:
    """Summary statistics of the closing price (sample std, interpolated quartiles)."""
    closes = series.close
    if closes.size < 2:
        raise SeriesTooShort("descriptive stats need at least 2 bars")
    q25, med, q75 = np.percentile(closes, [25, 50, 75])
    return DescriptiveStats(
        count=int(closes.size),
        mean=float(np.mean(closes)),
        std=float(np.std(closes, ddof=1)),
        min=float(np.min(closes)),
        q25=float(q25),
        median=float(med),
        q75=float(q75),
        max=float(np.max(closes)),
    )


def _parse_float(raw: str | None) -> float | None:
    if raw is None:
        return None
    raw = raw.strip()
    if not raw:
        return None
    try:
        v = float(raw)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def ingest_csv(path, schema: dict[str, str] | None = None,
               vol_window: int = DEFAULT_VOL_WINDOW) -> PriceSeries:
    """Read, validate, and clean an OHLCV CSV into a PriceSeries.

    schema remaps logical fields to column names (defaults to the Yahoo
    header). A mapped-and-present volatility column is used as an external
    volatility source; otherwise rolling realized volatility is computed
    when enough returns exist.
    """
    schema = {**DEFAULT_SCHEMA, **(schema or {})}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise MissingColumn(f"{path}: no header row")
        header = list(reader.fieldnames)
        for key in ("date", "close", "volume"):
            if schema[key] not in header:
                raise MissingColumn(
                    f"{path}: required column {schema[key]!r} not in header {header}")
        has_external_vol = schema.get("volatility") in header
        rows = list(reader)

    warnings: list[str] = []
    dropped = 0
    parsed = []
    for row in rows:
        date_raw = (row.get(schema["date"]) or "").strip()
        close = _parse_float(row.get(schema["close"]))
        if not date_raw or close is None or close <= 0.0:
            dropped += 1
            continue
        try:
            date = dt.date.fromisoformat(date_raw)
        except ValueError:
            dropped += 1
            continue
        volume = _parse_float(row.get(schema["volume"]))
        if volume is None or volume < 0:
            warnings.append(f"{date}: missing/invalid volume set to 0")
            volume = 0.0
        open_ = _parse_float(row.get(schema["open"]))
        high = _parse_float(row.get(schema["high"]))
        low = _parse_float(row.get(schema["low"]))
        adj = _parse_float(row.get(schema["adj_close"]))
        ext_vol = _parse_float(row.get(schema["volatility"])) if has_external_vol else None
        parsed.append((date, open_, high, low, close, adj, volume, ext_vol))

    if not parsed:
        raise EmptyAfterCleaning(f"{path}: no usable rows after cleaning")
    parsed.sort(key=lambda r: r[0])
    dates = [r[0] for r in parsed]
    for a, b in zip(dates, dates[1:]):
        if a == b:
            raise DuplicateDate(f"{path}: duplicate date {a}")

    close = np.array([r[4] for r in parsed])
    open_ = np.array([r[1] if r[1] is not None else r[4] for r in parsed])
    # high/low clamped to bracket open/close; these fields are unused by the models
    high = np.array([max(r[2] if r[2] is not None else r[4], r[1] or r[4], r[4])
                     for r in parsed])
    low = np.array([min(r[3] if r[3] is not None else r[4], r[1] or r[4], r[4])
                    for r in parsed])
    adj = np.array([r[5] if r[5] is not None else r[4] for r in parsed])
    volume = np.array([r[6] for r in parsed])
    returns = compute_returns(close)

    if has_external_vol:
        vol = np.array([r[7] if r[7] is not None else np.nan for r in parsed])
        source = VolatilitySource.EXTERNAL
    else:
        vol = np.full(len(parsed), np.nan)
        if returns.size >= vol_window:
            rv = np.full(returns.size, np.nan)
            csum = np.concatenate(([0.0], np.cumsum(returns * returns)))
            t = np.arange(vol_window - 1, returns.size)
            rv[t] = np.sqrt((csum[t + 1] - csum[t + 1 - vol_window]) / vol_window) \
                * math.sqrt(TRADING_DAYS_PER_YEAR)
            vol[1:] = rv  # return index t describes the move into bar t+1
        source = VolatilitySource.REALIZED_VOL_21

    return PriceSeries(dates, open_, high, low, close, adj, volume, returns,
                       vol, source, dropped_count=dropped, warnings=warnings)


def write_canonical_csv(series: PriceSeries, path) -> None:
    """Emit the cleaned series in the canonical Yahoo layout.

    Floats are written with repr precision so a re-ingest reproduces the
    series bit-for-bit; an external volatility column is appended when that
    source is in use.
    """
    header = list(CANONICAL_HEADER)
    external = series.volatility_source is VolatilitySource.EXTERNAL
    if external:
        header.append(DEFAULT_SCHEMA["volatility"])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, date in enumerate(series.dates):
            row = [date.isoformat(), repr(float(series.open[i])),
                   repr(float(series.high[i])), repr(float(series.low[i])),
                   repr(float(series.close[i])), repr(float(series.adj_close[i])),
                   repr(float(series.volume[i]))]
            if external:
                v = float(series.volatility[i])
                row.append("" if math.isnan(v) else repr(v))
            writer.writerow(row)
