"""End-to-end run orchestration with per-walk resume.

A run owns one artifact directory named by its config hash. Each walk
writes its own subdirectory atomically and drops a completion marker, so an
interrupted run picks up at the first incomplete walk and the stitched
outputs are byte-identical to an uninterrupted run (per-walk predictions
are re-read from disk either way).
"""
from __future__ import annotations

import concurrent.futures
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import artifacts, market_data, metrics, stats
from .backtest import buy_and_hold, curve_from_predictions
from .config import RunConfig
from .errors import IncompleteArtifact, WfbtError
from .hybrid import run_arima_walk
from .metrics import PerfMetrics
from .tuning import tune_walk
from .walkforward import Walk, WalkPlan, WalkPrediction, plan_walks, stitch

log = logging.getLogger("wfbt")


@dataclass
class RunResult:
    artifact_dir: Path
    config_hash: str
    outputs_hash: str
    strategy_metrics: PerfMetrics
    benchmark_metrics: PerfMetrics
    failed_walks: list[int]


OUTPUT_FILES = ["plan.csv", "stitched_predictions.csv", "equity_strategy.csv",
                "equity_benchmark.csv", "metrics.csv", "stats.csv", "plot_data.csv"]


def _walk_dir(run_dir: Path, walk: Walk) -> Path:
    return run_dir / "walks" / f"walk_{walk.walk_index:03d}"


def _execute_walk(config: RunConfig, series: market_data.PriceSeries,
                  walk: Walk, run_dir: Path) -> None:
    """Compute one walk and persist it (predictions + model artifacts)."""
    wdir = _walk_dir(run_dir, walk)
    wdir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    walk_seed = config.seed ^ walk.walk_index
    failure = None
    try:
        if config.model == "ARIMA":
            result = run_arima_walk(series, walk, config.arima)
            artifacts.write_order_search(wdir / "arima_fit.json", result.arima_search)
            prediction = result.prediction
        else:
            best, records = tune_walk(
                series, walk, config.model, config.strategy_mode,
                n_trials=config.n_trials, seed=walk_seed, space=config.space,
                search_cfg=config.arima, cost_rate=config.cost_rate,
                max_epochs=config.max_epochs, patience=config.patience)
            _write_trials(wdir / "trials.csv", walk.walk_index, records)
            assert best.result is not None
            prediction = best.result.prediction
            artifacts.write_json(wdir / "best_trial.json", {
                "trial": best.trial_index,
                "seed": best.seed,
                "params": best.params.__dict__,
                "valid_loss": best.valid_loss,
                "ir2_train": best.ir2_train,
                "ir2_valid": best.ir2_valid,
                "fallback_selected": best.fallback_selected,
                "best_epoch": best.result.best_epoch,
            })
            artifacts.write_json(wdir / "network.json", artifacts.network_to_dict(
                best.result.net, seed=best.seed,
                train_config={"optimizer": best.params.optimizer,
                              "learning_rate": best.params.learning_rate,
                              "batch_size": best.params.batch_size,
                              "max_epochs": config.max_epochs,
                              "patience": config.patience},
                scaler=None))
            if best.result.arima_search is not None:
                artifacts.write_order_search(wdir / "arima_fit.json",
                                             best.result.arima_search)
    except WfbtError as exc:
        failure = f"{type(exc).__name__}: {exc}"
        prediction = WalkPrediction(
            walk_index=walk.walk_index, test_indices=walk.test,
            predicted_close=np.full(len(walk.test), np.nan),
            actual_close=series.close[walk.test.start:walk.test.stop].copy(),
            model=config.model, failed=True, failure=failure)
    artifacts.write_predictions(wdir / "predictions.csv", prediction, series.dates)
    artifacts.write_json(wdir / "done.json", {
        "walk": walk.walk_index,
        "seconds": round(time.time() - started, 3),
        "failure": failure,
    })
    log.info("walk %d done in %.1fs%s", walk.walk_index, time.time() - started,
             f" (FAILED: {failure})" if failure else "")


def _write_trials(path: Path, walk_index: int, records) -> None:
    rows = []
    for r in records:
        p = r.params
        rows.append([walk_index, r.trial_index, p.neurons, p.layers,
                     artifacts.fmt(p.dropout), p.optimizer, artifacts.fmt(p.learning_rate),
                     p.batch_size, p.seq_len, artifacts.fmt(r.valid_loss),
                     artifacts.fmt(r.ir2_train), artifacts.fmt(r.ir2_valid),
                     int(r.selected)])
    artifacts.write_csv(path, ["walk", "trial", "neurons", "layers", "dropout",
                               "optimizer", "lr", "batch", "seq_len", "valid_loss",
                               "ir2_train", "ir2_valid", "selected"], rows)


def run(config: RunConfig, out_root: Path | str | None = None,
        resume: bool = True) -> RunResult:
    """Execute plan -> per-walk models -> stitch -> backtest -> reports."""
    if not config.data:
        raise ValueError("config.data must point to a CSV file")
    run_dir = artifacts.artifact_root(out_root) / config.config_hash()
    run_dir.mkdir(parents=True, exist_ok=True)
    _setup_file_log(run_dir / "run.log")
    log.info("run %s: model=%s mode=%s data=%s", config.config_hash(),
             config.model, config.mode, config.data)

    from . import config as config_mod
    config_mod.dump(config, run_dir / "config.yaml")

    series = market_data.ingest_csv(config.data, config.schema or None,
                                    vol_window=config.vol_window)
    plan = plan_walks(len(series), config.train_len, config.valid_len,
                      config.test_len, config.step)
    artifacts.write_plan(run_dir / "plan.csv", plan)
    log.info("%d walks over %d observations (%d trailing dropped)",
             len(plan.walks), plan.total_len, plan.dropped_tail)

    pending = [w for w in plan.walks
               if not (resume and (_walk_dir(run_dir, w) / "done.json").exists())]
    if config.jobs > 1 and len(pending) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = [pool.submit(_execute_walk, config, series, w, run_dir)
                       for w in pending]
            for f in futures:
                f.result()
    else:
        for walk in pending:
            _execute_walk(config, series, walk, run_dir)

    # stitched outputs always re-read from disk for byte-identical resumes
    predictions = [artifacts.read_predictions(_walk_dir(run_dir, w) / "predictions.csv",
                                              w.test)
                   for w in plan.walks]
    failed = [p.walk_index for p in predictions if p.failed]
    stitched = stitch(predictions, plan)
    artifacts.write_predictions(run_dir / "stitched_predictions.csv", stitched,
                                series.dates)

    oos = stitched.test_indices
    strat_curve, sig = curve_from_predictions(
        oos, stitched.predicted_close, series.close, config.strategy_mode,
        config.cost_rate, dates=series.dates)
    bench_curve = buy_and_hold(series.close[oos.start - 1:oos.stop], config.cost_rate,
                               dates=series.dates[oos.start - 1:oos.stop])
    artifacts.write_equity(run_dir / "equity_strategy.csv", strat_curve, sig.positions)
    artifacts.write_equity(run_dir / "equity_benchmark.csv", bench_curve,
                           np.ones(bench_curve.values.size - 1))

    strat_m = metrics.compute_all(strat_curve.values)
    bench_m = metrics.compute_all(bench_curve.values)
    artifacts.write_metrics_table(run_dir / "metrics.csv",
                                  [(config.model, strat_m),
                                   (f"BuyHold_{config.label}", bench_m)])
    paired = stats.paired_t_test(strat_curve.strategy_returns[1:],
                                 bench_curve.strategy_returns[1:])
    ols = stats.ols_alpha(strat_curve.strategy_returns[1:],
                          bench_curve.strategy_returns[1:])
    artifacts.write_stats(run_dir / "stats.csv", paired, ols)
    artifacts.write_plot_data(run_dir / "plot_data.csv", strat_curve.dates[1:], {
        config.model: strat_curve.values[1:],
        f"BuyHold_{config.label}": bench_curve.values[1:],
    })

    outputs_hash = artifacts.sha256_of_files([run_dir / f for f in OUTPUT_FILES])
    artifacts.write_json(run_dir / "manifest.json", {
        "config_hash": config.config_hash(),
        "outputs_hash": outputs_hash,
        "status": "complete",
        "label": config.label,
        "model": config.model,
        "mode": config.mode,
        "walks": len(plan.walks),
        "failed_walks": failed,
        "oos_start": oos.start,
        "oos_end": oos.stop,
    })
    log.info("run %s complete: outputs %s", config.config_hash(), outputs_hash[:12])
    return RunResult(run_dir, config.config_hash(), outputs_hash, strat_m, bench_m, failed)


def load_manifest(run_dir: Path) -> dict:
    path = Path(run_dir) / "manifest.json"
    if not path.exists():
        raise IncompleteArtifact(f"{run_dir}: no manifest (run incomplete?)")
    import json
    manifest = json.loads(path.read_text())
    if manifest.get("status") != "complete":
        raise IncompleteArtifact(f"{run_dir}: status={manifest.get('status')}")
    return manifest


_file_handler: logging.Handler | None = None


def _setup_file_log(path: Path) -> None:
    global _file_handler
    root = logging.getLogger("wfbt")
    root.setLevel(logging.INFO)
    if _file_handler is not None:
        root.removeHandler(_file_handler)
        _file_handler.close()
    _file_handler = logging.FileHandler(path)
    _file_handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    root.addHandler(_file_handler)
