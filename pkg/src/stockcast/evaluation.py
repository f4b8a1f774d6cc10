"""Rolling-origin backtesting and RMSE comparison reports.

Every fold refits its model from the training slice alone: scaling
parameters, changepoints, and coefficient estimates are all re-derived
per fold, and the fitting code never receives the test range.  A report
is a model-by-symbol grid of global-average RMSE with per-fold detail
kept for export.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .additive import AdditiveConfig, model_value, predict_with_interval
from .additive import fit as fit_additive
from .boosting import BoostConfig, build_feature_frame, fit_booster, hybrid_forecast
from .errors import ConfigError, DataError, ModelError
from .lstm import TrainConfig, predict_multistep
from .lstm import train as train_lstm
from .market_data import (
    BacktestFolds,
    OhlcvSeries,
    scale_minmax,
    split_sequences,
)
from .sarima import SarimaConfig, SarimaOrder
from .sarima import fit as fit_sarima
from .sarima import forecast as forecast_sarima
from .sentiment import SentimentSeries, align_sentiment

FAMILIES = ("persistence", "lstm", "additive", "sarima")

ALLOWED_OPTIONS = {
    "persistence": frozenset(),
    "lstm": frozenset(
        {
            "multivariate",
            "use_sentiment",
            "lookback",
            "hidden",
            "epochs",
            "learning_rate",
            "batch_size",
            "clip_norm",
        }
    ),
    "additive": frozenset(
        {
            "boosted",
            "use_sentiment",
            "trend",
            "capacity",
            "n_changepoints",
            "lambda_delta",
            "lags",
            "n_trees",
            "max_leaves",
            "min_samples_leaf",
            "l2_leaf_penalty",
            "boost_learning_rate",
            "max_bins",
        }
    ),
    "sarima": frozenset({"order"}),
}


@dataclass(frozen=True)
class ModelSpec:
    """One configured forecaster: report row name, family, and options."""

    name: str
    family: str
    options: dict = field(default_factory=dict)

    def validate(self) -> None:
        if not self.name:
            raise ConfigError("model name must be non-empty")
        if self.family not in FAMILIES:
            raise ConfigError(
                f"unknown model family {self.family!r}; pick one of {FAMILIES}"
            )
        extra = set(self.options) - ALLOWED_OPTIONS[self.family]
        if extra:
            raise ConfigError(
                f"{self.name}: options {sorted(extra)} not valid for family "
                f"{self.family!r}"
            )


@dataclass(frozen=True)
class ForecastRun:
    model: str
    fold: int
    predicted: np.ndarray
    actual: np.ndarray
    seconds: float

    def validate(self) -> None:
        if self.predicted.shape != self.actual.shape or self.predicted.ndim != 1:
            raise DataError("predicted and actual must be equal-length 1-D")
        if self.predicted.shape[0] < 1:
            raise DataError("forecast runs must contain at least one step")


@dataclass(frozen=True)
class BacktestResult:
    runs: tuple[ForecastRun, ...]
    failures: tuple[tuple[int, str], ...]


def rmse(predicted, actual) -> float:
    """Root mean squared error over aligned forecast/actual vectors."""
    p = np.asarray(predicted, dtype=float)
    a = np.asarray(actual, dtype=float)
    if p.ndim != 1 or p.shape != a.shape:
        raise DataError(f"length mismatch: {p.shape} vs {a.shape}")
    if p.shape[0] == 0:
        raise DataError("rmse needs at least one value")
    d = p - a
    return float(np.sqrt(np.mean(d * d)))


def _sentiment_column(train: OhlcvSeries, sentiment: SentimentSeries | None):
    """Aligned sentiment over the training dates, or None when unusable.

    A constant column (typically all zeros: no news in range) carries no
    signal and would break min-max scaling and least squares, so it is
    dropped rather than passed through.
    """
    if sentiment is None:
        return None
    col = align_sentiment(train.dates, sentiment)
    if np.ptp(col) == 0.0:
        return None
    return col


def _forecast_lstm(spec, train, horizon, sentiment, seed):
    o = spec.options
    features = (
        ["open", "high", "low", "volume", "close"]
        if o.get("multivariate", True)
        else ["close"]
    )
    matrix = train.feature_matrix(features)
    target_col = len(features) - 1
    if o.get("use_sentiment", False):
        col = _sentiment_column(train, sentiment)
        if col is not None:
            matrix = np.column_stack([matrix, col])
    scaled, scale = scale_minmax(matrix)
    lookback = int(o.get("lookback", 30))
    dataset = split_sequences(scaled, lookback, horizon, target_col)
    cfg = TrainConfig(
        hidden=int(o.get("hidden", 32)),
        epochs=int(o.get("epochs", 60)),
        learning_rate=float(o.get("learning_rate", 1e-3)),
        seed=seed,
        clip_norm=float(o.get("clip_norm", 5.0)),
        batch_size=int(o.get("batch_size", 32)),
    )
    weights, _ = train_lstm(dataset, cfg)
    return predict_multistep(weights, scaled[-lookback:], scale, target_col)


def fit_additive_spec(spec, train, sentiment):
    """Base additive fit for a spec; returns (model, close, sentiment column)."""
    o = spec.options
    close = train.column("close")
    exog = None
    names: tuple[str, ...] = ()
    senti_col = None
    if o.get("use_sentiment", False):
        senti_col = _sentiment_column(train, sentiment)
        if senti_col is not None:
            exog = senti_col.reshape(-1, 1)
            names = ("sentiment",)
    cfg = AdditiveConfig(
        trend=o.get("trend", "linear"),
        capacity=o.get("capacity"),
        n_changepoints=int(o.get("n_changepoints", 25)),
        lambda_delta=float(o.get("lambda_delta", 0.0)),
    )
    model = fit_additive(
        close, cfg, exogenous=exog, exog_names=names, origin=train.symbol
    )
    return model, close, senti_col


def additive_interval(
    spec: ModelSpec,
    train: OhlcvSeries,
    horizon: int,
    sentiment: SentimentSeries | None = None,
    seed: int = 0,
    level: float = 0.8,
    n_sims: int = 1000,
) -> tuple[np.ndarray, np.ndarray]:
    """Simulated (lower, upper) band for an additive spec's forecast window.

    Refits the base additive layer the same way the fold forecast does;
    future exogenous values are taken as zero (tomorrow's news is unknown),
    and any boosted correction moves only the central line, not the band.
    """
    model, _, _ = fit_additive_spec(spec, train, sentiment)
    iv = predict_with_interval(model, horizon, n_sims=n_sims, level=level, seed=seed)
    return iv.lower, iv.upper


def _forecast_additive(spec, train, horizon, sentiment, seed):
    o = spec.options
    model, close, senti_col = fit_additive_spec(spec, train, sentiment)
    if not o.get("boosted", False):
        t_future = np.arange(close.shape[0], close.shape[0] + horizon, dtype=float)
        return np.asarray(model_value(model, t_future), dtype=float)
    lags = tuple(int(l) for l in o.get("lags", (1, 2, 3, 4, 5)))
    t_hist = np.arange(close.shape[0], dtype=float)
    exog = None if senti_col is None else senti_col.reshape(-1, 1)
    residuals = close - model_value(model, t_hist, exog)
    X, y = build_feature_frame(close, residuals, lags, sentiment=senti_col)
    bcfg = BoostConfig(
        n_trees=int(o.get("n_trees", 60)),
        max_leaves=int(o.get("max_leaves", 7)),
        min_samples_leaf=int(o.get("min_samples_leaf", 5)),
        l2_leaf_penalty=float(o.get("l2_leaf_penalty", 1.0)),
        learning_rate=float(o.get("boost_learning_rate", 0.1)),
        max_bins=int(o.get("max_bins", 64)),
    )
    ensemble = fit_booster(X, y, bcfg)
    return hybrid_forecast(model, ensemble, horizon, close, lags)


def _forecast_sarima(spec, train, horizon, seed):
    raw = spec.options.get("order", (1, 1, 1, 0, 0, 0, 1))
    if len(raw) == 3:
        raw = tuple(raw) + (0, 0, 0, 1)
    order = SarimaOrder(*(int(v) for v in raw))
    model = fit_sarima(train.column("close"), order, SarimaConfig(seed=seed))
    return forecast_sarima(model, horizon)


def _forecast_fold(spec, train, horizon, sentiment, seed):
    if spec.family == "persistence":
        return np.full(horizon, train.column("close")[-1])
    if spec.family == "lstm":
        return _forecast_lstm(spec, train, horizon, sentiment, seed)
    if spec.family == "additive":
        return _forecast_additive(spec, train, horizon, sentiment, seed)
    return _forecast_sarima(spec, train, horizon, seed)


def run_backtest(
    spec: ModelSpec,
    series: OhlcvSeries,
    folds: BacktestFolds,
    sentiment: SentimentSeries | None = None,
    seed: int = 0,
) -> BacktestResult:
    """Fit and forecast once per fold, training strictly before the test range.

    Fold failures are collected, not raised, so one bad configuration
    cannot sink an entire comparison.
    """
    spec.validate()
    close = series.column("close")
    runs: list[ForecastRun] = []
    failures: list[tuple[int, str]] = []
    for fold_idx, ((train_start, train_end), (test_start, test_end)) in enumerate(
        folds, start=1
    ):
        train = series.slice(train_start, train_end)
        horizon = test_end - test_start
        started = time.perf_counter()
        try:
            predicted = _forecast_fold(spec, train, horizon, sentiment, seed + fold_idx)
        except (ConfigError, DataError, ModelError) as exc:
            failures.append((fold_idx, str(exc)))
            continue
        run = ForecastRun(
            model=spec.name,
            fold=fold_idx,
            predicted=np.asarray(predicted, dtype=float),
            actual=close[test_start:test_end].copy(),
            seconds=time.perf_counter() - started,
        )
        run.validate()
        runs.append(run)
    return BacktestResult(tuple(runs), tuple(failures))


@dataclass(frozen=True)
class ComparisonReport:
    """Model-by-symbol RMSE grid with per-fold detail.

    `cells` maps (model, symbol) to the fold RMSE tuple; `averages` holds
    their arithmetic means.  Wall-clock times stay out so exports are
    byte-stable across reruns.
    """

    models: tuple[str, ...]
    symbols: tuple[str, ...]
    cells: dict
    averages: dict
    metadata: dict

    def validate(self) -> None:
        for key, folds in self.cells.items():
            want = float(np.mean(folds))
            if abs(self.averages[key] - want) > 1e-12:
                raise DataError(f"report average for {key} does not match its folds")


def build_report(
    runs_by_symbol: dict[str, list[ForecastRun]], metadata: dict | None = None
) -> ComparisonReport:
    """Aggregate backtest runs into the comparison grid.

    Models appear in first-encountered order; every model must have the
    same fold count within a symbol or the grid is not comparable.
    """
    if not runs_by_symbol or all(not rs for rs in runs_by_symbol.values()):
        raise DataError("no runs to report")
    models: list[str] = []
    cells: dict = {}
    for symbol, runs in runs_by_symbol.items():
        per_model: dict[str, list[ForecastRun]] = {}
        for run in runs:
            run.validate()
            per_model.setdefault(run.model, []).append(run)
            if run.model not in models:
                models.append(run.model)
        counts = {m: len(rs) for m, rs in per_model.items()}
        if len(set(counts.values())) > 1:
            raise DataError(
                f"{symbol}: inconsistent fold counts across models: {counts}"
            )
        for model_name, model_runs in per_model.items():
            ordered = sorted(model_runs, key=lambda r: r.fold)
            cells[(model_name, symbol)] = tuple(
                rmse(r.predicted, r.actual) for r in ordered
            )
    averages = {key: float(np.mean(folds)) for key, folds in cells.items()}
    report = ComparisonReport(
        models=tuple(models),
        symbols=tuple(runs_by_symbol),
        cells=cells,
        averages=averages,
        metadata=dict(metadata or {}),
    )
    report.validate()
    return report


def report_csv(report: ComparisonReport) -> str:
    """Model-by-symbol grid of global-average RMSE, full float precision."""
    lines = ["model," + ",".join(report.symbols)]
    for model in report.models:
        row = [model]
        for symbol in report.symbols:
            value = report.averages.get((model, symbol))
            row.append("" if value is None else repr(value))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def report_json(report: ComparisonReport) -> str:
    """Full per-fold detail as deterministic (sorted, no-timestamp) JSON."""
    detail: dict = {}
    for (model, symbol), folds in report.cells.items():
        detail.setdefault(model, {})[symbol] = {
            "fold_rmse": list(folds),
            "average": report.averages[(model, symbol)],
        }
    payload = {
        "metadata": report.metadata,
        "models": list(report.models),
        "symbols": list(report.symbols),
        "results": detail,
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"
