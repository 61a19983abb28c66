"""Random-search hyperparameter tuning and the best-trial selection rule.

Selection: take the five completed trials with the lowest validation loss,
keep those whose validation-range risk-adjusted return (IR**) is non-zero,
and return the one where train and validation IR** agree most closely. If
every candidate's validation IR** is exactly zero (flat equity), fall back
to the lowest validation loss and flag it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .arima import ArimaSearchConfig
from .backtest import DEFAULT_COST_RATE, StrategyMode, curve_from_predictions
from .errors import NoCompletedTrials
from .hybrid import (HyperParams, WalkModelResult, arima_in_sample_fit,
                     arima_residual_column, run_lstm_walk)
from .market_data import PriceSeries
from .walkforward import Walk

DEFAULT_SPACE: dict[str, list] = {
    "neurons": [25, 50, 75, 100, 250, 500],
    "layers": [1, 2],
    "dropout": [0.075],
    "optimizer": ["Adam", "Nadam", "Adagrad"],
    "learning_rate": [0.01, 0.0001],
    "batch_size": [32],
    "seq_len": [7, 14, 21],
}

TOP_POOL = 5


@dataclass
class TrialRecord:
    trial_index: int
    params: HyperParams
    seed: int
    completed: bool = False
    valid_loss: float = float("nan")
    ir2_train: float = float("nan")
    ir2_valid: float = float("nan")
    error: str | None = None
    selected: bool = False
    fallback_selected: bool = False
    result: WalkModelResult | None = field(default=None, repr=False)


def sample_trials(space: dict[str, list] | None, n_trials: int = 20,
                  seed: int = 0) -> list[HyperParams]:
    """Deterministic draws from the Cartesian hyperparameter space, without
    replacement unless the space is smaller than n_trials."""
    space = space or DEFAULT_SPACE
    keys = [f for f in HyperParams.__dataclass_fields__ if f in space]
    combos = [dict(zip(keys, values))
              for values in itertools.product(*(space[k] for k in keys))]
    rng = np.random.default_rng(seed)
    replace = len(combos) < n_trials
    picks = rng.choice(len(combos), size=n_trials, replace=replace)
    return [HyperParams(**combos[i]) for i in picks]


def select_best(trials: list[TrialRecord]) -> TrialRecord:
    """Apply the top-5 / min |IR**_train - IR**_valid| rule.

    Pure in its input: permuting the list never changes the winner (sorts
    break ties by validation loss, then original trial index).
    """
    completed = [t for t in trials if t.completed]
    if not completed:
        raise NoCompletedTrials(f"all {len(trials)} trials failed")
    pool = sorted(completed, key=lambda t: (t.valid_loss, t.trial_index))[:TOP_POOL]
    nonzero = [t for t in pool if t.ir2_valid != 0.0]
    if nonzero:
        winner = min(nonzero, key=lambda t: (abs(t.ir2_train - t.ir2_valid),
                                             t.valid_loss, t.trial_index))
    else:
        winner = pool[0]
        winner.fallback_selected = True
    winner.selected = True
    return winner


def _range_ir2(result_pred: np.ndarray, indices: np.ndarray, series: PriceSeries,
               strategy: StrategyMode, cost_rate: float) -> float:
    curve, _ = curve_from_predictions(indices, result_pred, series.close,
                                      strategy, cost_rate)
    return metrics.compute_all(curve.values).ir_double_star


def tune_walk(series: PriceSeries, walk: Walk, model: str,
              strategy: StrategyMode, n_trials: int = 20, seed: int = 0,
              space: dict[str, list] | None = None,
              search_cfg: ArimaSearchConfig | None = None,
              cost_rate: float = DEFAULT_COST_RATE,
              max_epochs: int = 100, patience: int = 10,
              ) -> tuple[TrialRecord, list[TrialRecord]]:
    """Random search over one walk; trial k trains with seed = seed XOR k.

    model is "LSTM" or "LSTM_ARIMA"; the hybrid's ARIMA stage runs once per
    walk and is shared by every trial. IR** for the selection rule is
    computed with the same strategy mode the final backtest will use.
    """
    if model not in ("LSTM", "LSTM_ARIMA"):
        raise ValueError(f"tune_walk does not apply to model {model!r}")
    residual_column = None
    search = None
    if model == "LSTM_ARIMA":
        search = arima_in_sample_fit(series, walk, search_cfg or ArimaSearchConfig())
        residual_column = arima_residual_column(series, walk, search)

    records: list[TrialRecord] = []
    for k, params in enumerate(sample_trials(space, n_trials, seed)):
        record = TrialRecord(trial_index=k, params=params, seed=seed ^ k)
        try:
            result = run_lstm_walk(
                series, walk, params, record.seed,
                residual_column=residual_column, arima_search=search,
                model_label="LSTM-ARIMA" if model == "LSTM_ARIMA" else "LSTM",
                max_epochs=max_epochs, patience=patience)
            record.result = result
            record.valid_loss = result.valid_loss
            record.ir2_train = _range_ir2(result.train_pred, result.train_indices,
                                          series, strategy, cost_rate)
            record.ir2_valid = _range_ir2(result.valid_pred, result.valid_indices,
                                          series, strategy, cost_rate)
            record.completed = True
        except Exception as exc:  # walk survives a failed trial
            record.error = f"{type(exc).__name__}: {exc}"
        records.append(record)
    best = select_best(records)
    return best, records
