"""Run-artifact persistence: atomic file writes, CSV/JSON emitters, and
exact-roundtrip number formatting.

Every writer goes through a temp-then-rename so parallel walks can never
interleave within one file, and all floats are written with repr precision
so a resumed run stitches byte-identical outputs from disk.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from pathlib import Path

import numpy as np

from .arima import ArimaFit, ArimaSpec, OrderSearchResult
from .backtest import EquityCurve
from .errors import IncompleteArtifact
from .lstm import GATES, LstmLayerParams, LstmNetwork
from .metrics import METRICS_COLUMNS, PerfMetrics
from .stats import OLS_COLUMNS, OlsAlphaResult, PairedTestResult
from .walkforward import WalkPlan, WalkPrediction

ENV_ARTIFACT_ROOT = "WFBT_ARTIFACT_ROOT"
DEFAULT_ARTIFACT_ROOT = "artifacts"


def artifact_root(cli_out: str | None = None) -> Path:
    return Path(cli_out or os.environ.get(ENV_ARTIFACT_ROOT, DEFAULT_ARTIFACT_ROOT))


def fmt(x) -> str:
    """Exact-roundtrip float formatting (NaN spelled nan)."""
    v = float(x)
    return "nan" if math.isnan(v) else repr(v)


def atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(str(c) for c in row) for row in rows]
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_json(path: Path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def sha256_of_files(paths: list[Path]) -> str:
    h = hashlib.sha256()
    for p in paths:
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()


# ---------------------------------------------------------------- plan / predictions

def write_plan(path: Path, plan: WalkPlan) -> None:
    rows = [[w.walk_index, w.train.start, w.train.stop, w.valid.start,
             w.valid.stop, w.test.start, w.test.stop] for w in plan.walks]
    write_csv(path, ["walk", "train_start", "train_end", "valid_start",
                     "valid_end", "test_start", "test_end"], rows)


def write_predictions(path: Path, pred: WalkPrediction, dates) -> None:
    rows = []
    for i, t in enumerate(pred.test_indices):
        rows.append([dates[t].isoformat(), fmt(pred.actual_close[i]),
                     fmt(pred.predicted_close[i]), pred.model, pred.walk_index])
    write_csv(path, ["date", "actual_close", "predicted_close", "model", "walk_index"], rows)


def read_predictions(path: Path, test_indices: range) -> WalkPrediction:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if len(rows) != len(test_indices):
        raise IncompleteArtifact(
            f"{path}: {len(rows)} rows, expected {len(test_indices)}")
    predicted = np.array([float(r["predicted_close"]) for r in rows])
    return WalkPrediction(
        walk_index=int(rows[0]["walk_index"]),
        test_indices=test_indices,
        predicted_close=predicted,
        actual_close=np.array([float(r["actual_close"]) for r in rows]),
        model=rows[0]["model"],
        failed=bool(np.isnan(predicted).all()),
    )


# ---------------------------------------------------------------- equity / metrics / stats

def write_equity(path: Path, curve: EquityCurve, positions=None) -> None:
    n = curve.values.size
    rows = []
    for k in range(n):
        date = curve.dates[k].isoformat() if curve.dates else k
        # position decided on this day; the final day carries none
        pos = positions[k] if positions is not None and k < len(positions) else 0.0
        rows.append([date, fmt(pos), fmt(curve.strategy_returns[k]),
                     fmt(curve.cost_paid[k]), fmt(curve.values[k])])
    write_csv(path, ["date", "position", "strategy_return", "cost", "equity"], rows)


def read_equity(path: Path):
    """(dates, values, strategy_returns) parsed from an equity CSV."""
    import datetime as dt
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    dates = [dt.date.fromisoformat(r["date"]) for r in rows]
    values = np.array([float(r["equity"]) for r in rows])
    rets = np.array([float(r["strategy_return"]) for r in rows])
    return dates, values, rets


def write_metrics_table(path: Path, rows: list[tuple[str, PerfMetrics]]) -> None:
    write_csv(path, ["strategy"] + METRICS_COLUMNS,
              [[label] + [fmt(v) for v in pm.as_row()] for label, pm in rows])


def write_stats(path: Path, paired: PairedTestResult, ols: OlsAlphaResult) -> None:
    lines = ["test," + ",".join(["mean_diff", "t_stat", "p_value", "n"]),
             "paired_t," + ",".join([fmt(paired.mean_diff), fmt(paired.t_stat),
                                     fmt(paired.p_value), str(paired.n)]),
             "test," + ",".join(OLS_COLUMNS),
             "ols," + ",".join(fmt(v) for v in ols.as_row())]
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_plot_data(path: Path, dates, columns: dict[str, np.ndarray]) -> None:
    names = list(columns)
    rows = [[d.isoformat()] + [fmt(columns[c][i]) for c in names]
            for i, d in enumerate(dates)]
    write_csv(path, ["date"] + names, rows)


# ---------------------------------------------------------------- model serialization

def arima_fit_to_dict(fit: ArimaFit) -> dict:
    return {
        "spec": {"p": fit.spec.p, "d": fit.spec.d, "q": fit.spec.q},
        "constant": fit.constant,
        "phi": list(fit.phi),
        "theta": list(fit.theta),
        "sigma2": fit.sigma2,
        "loglik": fit.loglik,
        "aic": fit.aic,
        "bic": fit.bic,
        "residuals": list(fit.residuals),
        "n_obs": fit.n_obs,
        "warn_nonstationary": fit.warn_nonstationary,
        "warn_noninvertible": fit.warn_noninvertible,
    }


def arima_fit_from_dict(d: dict) -> ArimaFit:
    return ArimaFit(
        spec=ArimaSpec(**d["spec"]),
        constant=d["constant"],
        phi=np.array(d["phi"], dtype=float),
        theta=np.array(d["theta"], dtype=float),
        sigma2=d["sigma2"],
        loglik=d["loglik"],
        aic=d["aic"],
        bic=d["bic"],
        residuals=np.array(d["residuals"], dtype=float),
        n_obs=d["n_obs"],
        warn_nonstationary=d.get("warn_nonstationary", False),
        warn_noninvertible=d.get("warn_noninvertible", False),
    )


def write_order_search(path: Path, search: OrderSearchResult) -> None:
    write_json(path, {
        "best": arima_fit_to_dict(search.best),
        "table": [{"p": s.p, "d": s.d, "q": s.q,
                   "criterion": None if math.isnan(v) else v, "converged": c}
                  for s, v, c in search.table],
    })


def network_to_dict(net: LstmNetwork, seed: int | None = None,
                    train_config: dict | None = None,
                    scaler: dict | None = None) -> dict:
    layers = []
    for layer in net.layers:
        entry = {}
        for gate in GATES:
            entry[f"W_{gate}"] = layer.W(gate).tolist()
            entry[f"U_{gate}"] = layer.U(gate).tolist()
            entry[f"b_{gate}"] = layer.b(gate).tolist()
        layers.append(entry)
    return {
        "layers": layers,
        "head_w": net.head_w.tolist(),
        "head_b": float(net.head_b[0]),
        "hidden_size": net.hidden_size,
        "input_size": net.input_size,
        "dropout_rate": net.dropout_rate,
        "seed": seed,
        "train_config": train_config,
        "scaler": scaler,
    }


def network_from_dict(d: dict) -> LstmNetwork:
    layers = []
    for entry in d["layers"]:
        kwargs = {key: np.array(val, dtype=float) for key, val in entry.items()}
        layers.append(LstmLayerParams(**kwargs))
    return LstmNetwork(layers, np.array(d["head_w"], dtype=float),
                       np.array([d["head_b"]]), d["hidden_size"],
                       d["input_size"], d["dropout_rate"])
