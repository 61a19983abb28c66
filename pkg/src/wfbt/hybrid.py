"""Per-walk model runners: plain LSTM, hybrid LSTM-ARIMA, and pure ARIMA.

The hybrid walk follows the six-step recipe: fit the best ARIMA on the
walk's in-sample closes (train+validation), extract its residuals, add them
to the feature matrix, tune/train the LSTM, and predict the test range in
price units. Test-range residuals come from rolling one-step forecasts with
the frozen in-sample coefficients, so nothing downstream of a test day ever
feeds a feature at that day.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import arima
from .arima import ArimaSearchConfig, OrderSearchResult
from .features import FeatureMatrix, build_features, make_dataset
from .lstm import LstmNetwork, TrainConfig, init_network, predict_series, train
from .market_data import PriceSeries
from .walkforward import Walk, WalkPrediction


@dataclass(frozen=True)
class HyperParams:
    neurons: int = 50
    layers: int = 1
    dropout: float = 0.075
    optimizer: str = "Adam"
    learning_rate: float = 0.01
    batch_size: int = 32
    seq_len: int = 7


@dataclass
class WalkModelResult:
    """Everything a walk produces: test predictions plus the in-sample
    prediction vectors needed for the tuning metric."""

    prediction: WalkPrediction
    train_pred: np.ndarray
    train_indices: np.ndarray
    valid_pred: np.ndarray
    valid_indices: np.ndarray
    valid_loss: float
    best_epoch: int
    history: list[tuple[float, float]]
    net: LstmNetwork | None = None
    arima_search: OrderSearchResult | None = None


def arima_in_sample_fit(series: PriceSeries, walk: Walk,
                        cfg: ArimaSearchConfig) -> OrderSearchResult:
    """Order search on the walk's train+validation closes."""
    is_closes = series.close[walk.train.start:walk.valid.stop]
    return arima.search_from_config(is_closes, cfg)


def rolling_forecasts(fit: arima.ArimaFit, closes: np.ndarray, start: int,
                      indices: range) -> np.ndarray:
    """One-step-ahead forecasts of closes[t] for t in indices, each using
    the frozen fit and the history closes[start:t]."""
    return np.array([arima.forecast_one(fit, closes[start:t]) for t in indices])


def arima_residual_column(series: PriceSeries, walk: Walk,
                          search: OrderSearchResult) -> np.ndarray:
    """Full-length residual feature: in-sample one-step errors over
    train+validation (burn-in zeroed), rolling frozen-coefficient forecast
    errors over the test range, zero elsewhere (unused rows)."""
    col = np.zeros(len(series))
    fit = search.best
    col[walk.train.start:walk.valid.stop] = arima.residual_series(fit)
    preds = rolling_forecasts(fit, series.close, walk.train.start, walk.test)
    col[walk.test.start:walk.test.stop] = series.close[walk.test.start:walk.test.stop] - preds
    return col


def run_arima_walk(series: PriceSeries, walk: Walk, cfg: ArimaSearchConfig,
                   model_label: str = "ARIMA") -> WalkModelResult:
    """Pure-ARIMA walk: order search in-sample, rolling forecasts over test."""
    search = arima_in_sample_fit(series, walk, cfg)
    preds = rolling_forecasts(search.best, series.close, walk.train.start, walk.test)
    prediction = WalkPrediction(
        walk_index=walk.walk_index,
        test_indices=walk.test,
        predicted_close=preds,
        actual_close=series.close[walk.test.start:walk.test.stop].copy(),
        model=model_label,
    )
    return WalkModelResult(prediction, np.empty(0), np.empty(0, dtype=int),
                           np.empty(0), np.empty(0, dtype=int),
                           valid_loss=float("nan"), best_epoch=0, history=[],
                           arima_search=search)


def run_lstm_walk(series: PriceSeries, walk: Walk, params: HyperParams, seed: int,
                  residual_column: np.ndarray | None = None,
                  arima_search: OrderSearchResult | None = None,
                  model_label: str | None = None,
                  max_epochs: int = 100, patience: int = 10) -> WalkModelResult:
    """Train one LSTM configuration on a walk and predict all three ranges.

    With a residual column this is the hybrid LSTM-ARIMA walk; without it,
    the plain LSTM walk. Feature scalers are fit on the training rows only.
    """
    matrix = build_features(series, residual_column, fit_range=walk.train)
    train_set = make_dataset(matrix, params.seq_len,
                             range(walk.train.start + params.seq_len, walk.train.stop))
    valid_set = make_dataset(matrix, params.seq_len, walk.valid)
    test_set = make_dataset(matrix, params.seq_len, walk.test)

    net = init_network(len(matrix.columns), params.neurons, params.layers,
                       params.dropout, seed)
    config = TrainConfig(optimizer=params.optimizer, learning_rate=params.learning_rate,
                         batch_size=params.batch_size, max_epochs=max_epochs,
                         patience=patience, seed=seed)
    net, history, best_epoch = train(net, train_set, valid_set, config)

    scaler = matrix.close_scaler
    label = model_label or ("LSTM-ARIMA" if residual_column is not None else "LSTM")
    prediction = WalkPrediction(
        walk_index=walk.walk_index,
        test_indices=walk.test,
        predicted_close=predict_series(net, test_set, scaler),
        actual_close=series.close[walk.test.start:walk.test.stop].copy(),
        model=label,
    )
    return WalkModelResult(
        prediction=prediction,
        train_pred=predict_series(net, train_set, scaler),
        train_indices=train_set.target_indices,
        valid_pred=predict_series(net, valid_set, scaler),
        valid_indices=valid_set.target_indices,
        valid_loss=history[best_epoch - 1][1],
        best_epoch=best_epoch,
        history=history,
        net=net,
        arima_search=arima_search,
    )


def run_hybrid_walk(series: PriceSeries, walk: Walk, search_cfg: ArimaSearchConfig,
                    params: HyperParams, seed: int,
                    max_epochs: int = 100, patience: int = 10) -> WalkModelResult:
    """The six-step LSTM-ARIMA walk for a single hyperparameter set."""
    search = arima_in_sample_fit(series, walk, search_cfg)
    residual_column = arima_residual_column(series, walk, search)
    return run_lstm_walk(series, walk, params, seed,
                         residual_column=residual_column, arima_search=search,
                         model_label="LSTM-ARIMA",
                         max_epochs=max_epochs, patience=patience)
