"""Command-line front end: ingest, run, sensitivity, ensemble, report.

Artifacts land under --out, the WFBT_ARTIFACT_ROOT environment variable,
or ./artifacts, in that order of precedence.
"""
from __future__ import annotations

import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import artifacts, config as config_mod, ensemble as ensemble_mod
from . import market_data, metrics as metrics_mod, pipeline
from .backtest import EquityCurve
from .errors import WfbtError

HIGHER_BETTER = {"ARC": True, "ASD": False, "MD": False, "MLD": False,
                 "IR*": True, "IR**": True}


@click.group()
def main():
    """Walk-forward ARIMA / LSTM / LSTM-ARIMA backtesting engine."""
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)


def _echo_metrics(label: str, pm) -> None:
    row = "  ".join(f"{name}={value:.2f}" for name, value
                    in zip(metrics_mod.METRICS_COLUMNS, pm.as_row()))
    click.echo(f"{label}: {row}")


@main.command()
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--out", default=None, help="Directory for canonical CSVs and the stats report.")
def ingest(paths, out):
    """Validate and clean OHLCV CSVs; emit canonical CSVs and descriptive stats."""
    out_dir = Path(out) if out else Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    stats_rows = []
    header = ["", "Count", "Mean", "Standard Deviation", "Min", "25%", "50%", "75%", "Max"]
    for path in paths:
        try:
            series = market_data.ingest_csv(path)
        except WfbtError as exc:
            raise click.ClickException(f"{path}: {exc}")
        label = Path(path).stem
        canonical = out_dir / f"{label}_canonical.csv"
        market_data.write_canonical_csv(series, canonical)
        st = market_data.descriptive_stats(series)
        stats_rows.append([label, st.count] + [artifacts.fmt(v) for v in
                                               (st.mean, st.std, st.min, st.q25,
                                                st.median, st.q75, st.max)])
        click.echo(f"{path}: {len(series)} bars, {series.dropped_count} rows dropped, "
                   f"{len(series.warnings)} warnings -> {canonical}")
        click.echo(f"  count={st.count} mean={st.mean:.0f} min={st.min:.0f} "
                   f"max={st.max:.0f}")
    artifacts.write_csv(out_dir / "descriptive_stats.csv", header, stats_rows)


def _load_config(config_path, data, model, mode, seed, jobs) -> config_mod.RunConfig:
    cfg = config_mod.load(config_path) if config_path else config_mod.RunConfig()
    changes = {}
    if data:
        changes["data"] = data
        changes["label"] = Path(data).stem
    if model:
        changes["model"] = model
    if mode:
        changes["mode"] = mode
    if seed is not None:
        changes["seed"] = seed
    if jobs is not None:
        changes["jobs"] = jobs
    return cfg.replace(**changes) if changes else cfg


run_options = [
    click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                 help="YAML config; every omitted key takes the base-case default."),
    click.option("--data", type=click.Path(exists=True), default=None),
    click.option("--model", type=click.Choice(config_mod.MODELS), default=None),
    click.option("--mode", type=click.Choice(config_mod.MODES), default=None),
    click.option("--seed", type=int, default=None),
    click.option("--jobs", type=int, default=None),
    click.option("--out", default=None, help="Artifact root (or $WFBT_ARTIFACT_ROOT)."),
]


def _with_run_options(fn):
    for opt in reversed(run_options):
        fn = opt(fn)
    return fn


@main.command()
@_with_run_options
def run(config_path, data, model, mode, seed, jobs, out):
    """Execute the full walk-forward pipeline for one (data, model, mode)."""
    cfg = _load_config(config_path, data, model, mode, seed, jobs)
    try:
        result = pipeline.run(cfg, out)
    except WfbtError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"artifact: {result.artifact_dir}")
    click.echo(f"outputs hash: {result.outputs_hash}")
    _echo_metrics(cfg.model, result.strategy_metrics)
    _echo_metrics("BuyHold", result.benchmark_metrics)
    if result.failed_walks:
        click.echo(f"failed walks: {result.failed_walks}", err=True)


@main.command()
@_with_run_options
@click.option("--override", "overrides", multiple=True,
              help="Extra KEY=VALUE override (dropout or batch_size).")
@click.option("--unsafe", is_flag=True,
              help="Allow override values outside the declared sensitivity sets.")
def sensitivity(config_path, data, model, mode, seed, jobs, out, overrides, unsafe):
    """Re-run the base config under the standard hyperparameter overrides."""
    base = _load_config(config_path, data, model, mode, seed, jobs)
    extra = {}
    for item in overrides:
        key, _, value = item.partition("=")
        extra[key] = float(value) if key == "dropout" else int(value)
    try:
        variants = config_mod.sensitivity_variants(base, unsafe=unsafe, overrides=extra)
    except ValueError as exc:
        raise click.ClickException(str(exc))

    rows = []
    for name, cfg in [("base", base)] + variants:
        result = pipeline.run(cfg, out)
        rows.append((name, result.strategy_metrics))
        _echo_metrics(name, result.strategy_metrics)

    out_dir = artifacts.artifact_root(out)
    table_path = out_dir / f"sensitivity_{base.config_hash()}.csv"
    _write_comparison(table_path, rows)
    click.echo(f"comparison table: {table_path}")


def _write_comparison(path: Path, rows) -> None:
    """Tables 7-9 layout: base-case row first, one row per override, plus a
    final row naming the per-column best variant."""
    data_rows = [[name] + [artifacts.fmt(v) for v in pm.as_row()] for name, pm in rows]
    best_row = ["best"]
    for j, col in enumerate(metrics_mod.METRICS_COLUMNS):
        values = [pm.as_row()[j] for _, pm in rows]
        idx = int(np.argmax(values)) if HIGHER_BETTER[col] else int(np.argmin(values))
        best_row.append(rows[idx][0])
    artifacts.write_csv(path, ["case"] + metrics_mod.METRICS_COLUMNS,
                        data_rows + [best_row])


def _strategy_curve(run_dir: Path) -> tuple[dict, EquityCurve]:
    manifest = pipeline.load_manifest(run_dir)
    dates, values, rets = artifacts.read_equity(Path(run_dir) / "equity_strategy.csv")
    curve = EquityCurve(values, rets, np.zeros(values.size), dates)
    return manifest, curve


def _benchmark_curve(run_dir: Path) -> EquityCurve:
    dates, values, rets = artifacts.read_equity(Path(run_dir) / "equity_benchmark.csv")
    return EquityCurve(values, rets, np.zeros(values.size), dates)


@main.command()
@click.argument("artifact_dirs", nargs=-1, required=True,
                type=click.Path(exists=True, file_okay=False))
@click.option("--out", default=None)
def ensemble(artifact_dirs, out):
    """Equal-weight combination of completed runs (one per index)."""
    components, bench_components = [], []
    mode = None
    for d in artifact_dirs:
        manifest, curve = _strategy_curve(Path(d))
        label = f"{manifest['label']}_{manifest['model']}"
        components.append((label, curve))
        bench_components.append((manifest["label"], _benchmark_curve(Path(d))))
        mode = mode or manifest["mode"]
    curve, pm = ensemble_mod.ensemble_report(components)
    bench_curve, bench_pm = ensemble_mod.ensemble_report(bench_components)

    out_dir = artifacts.artifact_root(out) / "ensemble"
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts.write_equity(out_dir / "equity_ensemble.csv", curve)
    artifacts.write_equity(out_dir / "equity_benchmark.csv", bench_curve)
    artifacts.write_metrics_table(out_dir / "metrics.csv",
                                  [("ensemble", pm), ("BuyHold_ensemble", bench_pm)])
    _echo_metrics(f"ensemble[{mode}]", pm)
    _echo_metrics("BuyHold ensemble", bench_pm)
    click.echo(f"ensemble artifact: {out_dir}")


@main.command()
@click.argument("artifact_dirs", nargs=-1, required=True,
                type=click.Path(exists=True, file_okay=False))
@click.option("--out", default=None)
def report(artifact_dirs, out):
    """Combined metrics/stats tables and equity plot data for finished runs."""
    out_dir = artifacts.artifact_root(out) / "report"
    out_dir.mkdir(parents=True, exist_ok=True)

    metric_rows: list[tuple[str, metrics_mod.PerfMetrics]] = []
    stats_lines: list[str] = []
    plot_columns: dict[str, np.ndarray] = {}
    plot_dates = None
    bench_done = set()
    best_label, best_ir2 = None, -np.inf
    for d in artifact_dirs:
        manifest, curve = _strategy_curve(Path(d))
        label = f"{manifest['label']}_{manifest['model']}_{manifest['mode']}"
        pm = metrics_mod.compute_all(curve.values)
        metric_rows.append((label, pm))
        if pm.ir_double_star > best_ir2:
            best_label, best_ir2 = label, pm.ir_double_star
        if manifest["label"] not in bench_done:
            bench_done.add(manifest["label"])
            bench = _benchmark_curve(Path(d))
            metric_rows.append((f"BuyHold_{manifest['label']}",
                                metrics_mod.compute_all(bench.values)))
            if plot_dates is None or len(bench.dates) < len(plot_dates):
                plot_dates = bench.dates
            plot_columns[f"BuyHold_{manifest['label']}"] = bench
        stats_lines.append(f"{label}: " + (Path(d) / "stats.csv").read_text().strip())
        plot_columns[label] = curve

    artifacts.write_metrics_table(out_dir / "metrics.csv", metric_rows)
    (out_dir / "stats.txt").write_text("\n".join(stats_lines) + "\n")

    # plot data on the shortest common calendar, forward-filled per column
    assert plot_dates is not None
    columns = {}
    for name, curve in plot_columns.items():
        by_date = dict(zip(curve.dates, curve.values))
        values, last = [], 1.0
        for date in plot_dates:
            last = by_date.get(date, last)
            values.append(last)
        columns[name] = np.array(values)
    artifacts.write_plot_data(out_dir / "plot_data.csv", plot_dates[1:],
                              {k: v[1:] for k, v in columns.items()})

    for label, pm in metric_rows:
        marker = "  <= best IR**" if label == best_label else ""
        _echo_metrics(label, pm)
        if marker:
            click.echo(marker)
    click.echo(f"report: {out_dir}")


if __name__ == "__main__":
    main()
