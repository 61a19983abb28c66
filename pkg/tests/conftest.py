import datetime as dt

import numpy as np
import pytest

from wfbt import market_data


def write_ohlcv_csv(path, closes, start=dt.date(2000, 1, 3), volume=1_000_000,
                    extra_columns=None):
    """Write a minimal Yahoo-layout CSV with the given closes."""
    header = "Date,Open,High,Low,Close,Adj Close,Volume"
    extra_names = list(extra_columns or {})
    if extra_names:
        header += "," + ",".join(extra_names)
    lines = [header]
    date = start
    for i, c in enumerate(closes):
        c = repr(float(c))
        row = f"{date.isoformat()},{c},{c},{c},{c},{c},{volume}"
        for name in extra_names:
            row += f",{float(extra_columns[name][i])!r}"
        lines.append(row)
        date += dt.timedelta(days=1)
    path.write_text("\n".join(lines) + "\n")
    return path


def synthetic_closes(n, seed=0, drift=0.0002, vol=0.01):
    rng = np.random.default_rng(seed)
    rets = drift + vol * rng.standard_normal(n - 1)
    return 100.0 * np.cumprod(np.concatenate(([1.0], 1.0 + rets)))


def make_series(closes, start=dt.date(2000, 1, 3), tmp_path=None):
    """PriceSeries via the real ingest path (temp CSV round trip)."""
    import tempfile
    from pathlib import Path
    if tmp_path is None:
        tmp_path = Path(tempfile.mkdtemp())
    path = write_ohlcv_csv(tmp_path / "series.csv", list(closes), start)
    return market_data.ingest_csv(path)


def simulate_arma(n, phi=(), theta=(), sigma=1.0, seed=0, c=0.0):
    """Reference ARMA simulator for recovery oracles (burn-in discarded)."""
    rng = np.random.default_rng(seed)
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    burn = 200
    eps = rng.normal(0.0, sigma, n + burn)
    x = np.zeros(n + burn)
    for t in range(n + burn):
        val = c + eps[t]
        for i in range(1, phi.size + 1):
            if t - i >= 0:
                val += phi[i - 1] * x[t - i]
        for j in range(1, theta.size + 1):
            if t - j >= 0:
                val += theta[j - 1] * eps[t - j]
        x[t] = val
    return x[burn:]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
