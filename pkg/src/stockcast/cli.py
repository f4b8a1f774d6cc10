"""Command-line front end: ingest, sentiment, train, forecast, backtest, tune, report.

One key=value config file drives every command; `--seed` and `--out`
override it per run.  Each invocation rewrites `resolved_config.txt` in
the output directory with the effective settings, so any result file can
be traced back to the exact configuration that produced it.

Exit codes: 0 success, 2 configuration problems, 3 data problems,
4 model fitting or forecasting failures.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import re
import sys
from pathlib import Path

import numpy as np

from ._serde import fmt, write_atomic
from .boosting import BoostConfig, build_feature_frame, fit_booster, hybrid_forecast
from .boosting import load_booster, save_booster
from .additive import load_additive, model_value, predict_with_interval, save_additive
from .config import OPTION_TYPES, RunConfig, load_config
from .errors import ConfigError, DataError, ModelError, StockcastError
from .evaluation import (
    ALLOWED_OPTIONS,
    ModelSpec,
    additive_interval,
    build_report,
    fit_additive_spec,
    report_csv,
    report_json,
    rmse,
    run_backtest,
)
from .lstm import TrainConfig, TrainedLstm, load_lstm, predict_multistep, save_lstm
from .lstm import train as train_lstm
from .market_data import (
    apply_scale,
    fetch_remote,
    parse_csv,
    rolling_splits,
    scale_minmax,
    serialize_csv,
    split_sequences,
)
from .plots import forecast_plot
from .sarima import SarimaConfig, SarimaOrder, load_sarima, save_sarima
from .sarima import fit as fit_sarima
from .sarima import forecast as forecast_sarima
from .sentiment import (
    DEFAULT_STATES,
    HmmModel,
    load_hmm,
    load_lexicon,
    load_scores,
    read_documents,
    score_documents,
    scores_csv,
    supervised_estimate,
    tokenize,
    words_to_tokens,
)
from .tuning import SearchParam, SearchSpace, export_trials, grid_optimize, stepwise_optimize


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig({})
    return cfg.with_overrides(seed=args.seed, out_dir=args.out)


def _emit_resolved(cfg: RunConfig) -> None:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_atomic(cfg.out_dir / "resolved_config.txt", "\n".join(cfg.resolved_lines()) + "\n")


def _config_digest(cfg: RunConfig) -> str:
    # out.dir stays out of the hash: where results land does not change them
    lines = [l for l in cfg.resolved_lines() if not l.startswith("out.dir=")]
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()


def _series_path(cfg: RunConfig, symbol: str) -> Path:
    return cfg.data_dir / f"{symbol}.csv"


def _load_series(cfg: RunConfig, symbol: str):
    path = _series_path(cfg, symbol)
    if not path.exists():
        raise DataError(f"no ingested series for {symbol!r}: {path} not found")
    return parse_csv(path.read_bytes(), symbol)


def _load_sentiment(cfg: RunConfig):
    raw = cfg.raw.get("sentiment.scores")
    if raw is None:
        return None
    path = Path(raw)
    if not path.exists():
        raise DataError(f"sentiment scores file not found: {path}")
    return load_scores(path)


def _required_path(cfg: RunConfig, key: str) -> Path:
    raw = cfg.raw.get(key)
    if raw is None:
        raise ConfigError(f"{key} must be set for this command")
    path = Path(raw)
    if not path.exists():
        raise DataError(f"{key}: file not found: {path}")
    return path


def _save_model_atomic(save_fn, model, path: Path) -> None:
    tmp = path.with_name(path.name + ".tmp")
    save_fn(model, tmp)
    os.replace(tmp, path)


def cmd_ingest(cfg: RunConfig, args) -> int:
    symbol = args.symbol
    if args.csv:
        src = Path(args.csv)
        if not src.exists():
            raise DataError(f"input file not found: {src}")
        raw = src.read_bytes()
        origin = str(src)
    else:
        raw = fetch_remote(args.from_url, symbol, args.start or "", args.end or "")
        origin = args.from_url
    try:
        series = parse_csv(raw, symbol)
    except DataError as exc:
        match = re.search(r"line (\d+)", str(exc))
        if match:
            lines = raw.decode("utf-8", errors="replace").splitlines()
            lineno = int(match.group(1))
            if 1 <= lineno <= len(lines):
                print(f"offending line: {lines[lineno - 1]}", file=sys.stderr)
        raise
    cfg.data_dir.mkdir(parents=True, exist_ok=True)
    dest = _series_path(cfg, symbol)
    write_atomic(dest, serialize_csv(series))
    dates = series.dates
    print(f"{symbol}: {len(series)} bars from {dates[0]} to {dates[-1]} ({origin} -> {dest})")
    return 0


def _estimate_from_corpus(path: Path, lexicon: dict) -> HmmModel:
    """Labeled lines `label<TAB>text`; each document trains as a constant-state run."""
    corpus = []
    for i, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t", 1)
        if len(parts) != 2:
            raise DataError(f"corpus line {i}: expected label<TAB>text")
        label = parts[0].strip()
        if label not in DEFAULT_STATES:
            raise DataError(
                f"corpus line {i}: unknown label {label!r}; expected one of {DEFAULT_STATES}"
            )
        tokens = words_to_tokens(tokenize(parts[1]), lexicon)
        if not tokens:
            continue
        state = DEFAULT_STATES.index(label)
        corpus.append((tokens, (state,) * len(tokens)))
    if not corpus:
        raise DataError(f"no usable labeled documents in {path}")
    return supervised_estimate(corpus)


def cmd_sentiment(cfg: RunConfig, args) -> int:
    lexicon = load_lexicon(_required_path(cfg, "sentiment.lexicon"))
    docs_path = _required_path(cfg, "sentiment.docs")
    if cfg.raw.get("sentiment.model"):
        model = load_hmm(_required_path(cfg, "sentiment.model"))
    elif cfg.raw.get("sentiment.corpus"):
        model = _estimate_from_corpus(_required_path(cfg, "sentiment.corpus"), lexicon)
    else:
        raise ConfigError("set sentiment.model (saved file) or sentiment.corpus (labeled text)")
    docs = read_documents(docs_path, lexicon)
    scores_path = Path(cfg.raw.get("sentiment.scores") or cfg.out_dir / "sentiment.csv")

    dead = sorted(
        {
            f"{doc.date} ({doc.source})"
            for doc in docs
            for tok in doc.tokens
            if np.all(model.emission[:, tok] == 0.0)
        }
    )
    if dead:
        raise DataError(
            "documents contain tokens no state can emit: " + ", ".join(dead)
        )
    if not docs:
        print(f"warning: {docs_path} has no scoreable documents", file=sys.stderr)
        scores_path.parent.mkdir(parents=True, exist_ok=True)
        write_atomic(scores_path, "date,score\n")
        return 0
    series = score_documents(model, docs)
    scores_path.parent.mkdir(parents=True, exist_ok=True)
    write_atomic(scores_path, scores_csv(series))
    lo, hi = float(np.min(series.scores)), float(np.max(series.scores))
    print(
        f"{len(docs)} documents over {len(series.dates)} dates -> {scores_path} "
        f"(scores {lo:.3f} to {hi:.3f})"
    )
    return 0


def _train_lstm_full(spec: ModelSpec, series, cfg: RunConfig) -> TrainedLstm:
    o = spec.options
    features = (
        ("open", "high", "low", "volume", "close")
        if o.get("multivariate", True)
        else ("close",)
    )
    matrix = series.feature_matrix(features)
    scaled, scale = scale_minmax(matrix)
    lookback = int(o.get("lookback", cfg.lookback))
    dataset = split_sequences(scaled, lookback, cfg.horizon, len(features) - 1)
    train_cfg = TrainConfig(
        hidden=int(o.get("hidden", 32)),
        epochs=int(o.get("epochs", 60)),
        learning_rate=float(o.get("learning_rate", 1e-3)),
        seed=cfg.seed,
        clip_norm=float(o.get("clip_norm", 5.0)),
        batch_size=int(o.get("batch_size", 32)),
    )
    weights, _ = train_lstm(dataset, train_cfg)
    return TrainedLstm(
        weights=weights,
        scale=scale,
        feature_names=features,
        target_col=len(features) - 1,
        config=train_cfg,
    )


def _sarima_order(spec: ModelSpec) -> SarimaOrder:
    raw = spec.options.get("order", (1, 1, 1, 0, 0, 0, 1))
    if len(raw) == 3:
        raw = tuple(raw) + (0, 0, 0, 1)
    return SarimaOrder(*(int(v) for v in raw))


def cmd_train(cfg: RunConfig, args) -> int:
    spec = cfg.model_spec(args.model)
    if spec.family == "persistence":
        raise ConfigError("persistence repeats the last close; there is nothing to train")
    if spec.options.get("use_sentiment", False):
        raise ConfigError(
            "use_sentiment models train per backtest fold; the standalone "
            "trainer has no future sentiment source"
        )
    series = _load_series(cfg, args.symbol)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    dest = cfg.out_dir / f"{args.model}_{args.symbol}.txt"
    extra = ""
    if spec.family == "lstm":
        _save_model_atomic(save_lstm, _train_lstm_full(spec, series, cfg), dest)
    elif spec.family == "additive":
        model, close, _ = fit_additive_spec(spec, series, None)
        _save_model_atomic(save_additive, model, dest)
        if spec.options.get("boosted", False):
            lags = tuple(int(l) for l in spec.options.get("lags", (1, 2, 3, 4, 5)))
            t_hist = np.arange(close.shape[0], dtype=float)
            X, y = build_feature_frame(close, close - model_value(model, t_hist), lags)
            boost_cfg = BoostConfig(
                n_trees=int(spec.options.get("n_trees", 60)),
                max_leaves=int(spec.options.get("max_leaves", 7)),
                min_samples_leaf=int(spec.options.get("min_samples_leaf", 5)),
                l2_leaf_penalty=float(spec.options.get("l2_leaf_penalty", 1.0)),
                learning_rate=float(spec.options.get("boost_learning_rate", 0.1)),
                max_bins=int(spec.options.get("max_bins", 64)),
            )
            booster_dest = cfg.out_dir / f"{args.model}_{args.symbol}_booster.txt"
            _save_model_atomic(save_booster, fit_booster(X, y, boost_cfg), booster_dest)
            extra = f" + {booster_dest}"
    else:
        model = fit_sarima(
            series.column("close"), _sarima_order(spec), SarimaConfig(seed=cfg.seed)
        )
        _save_model_atomic(save_sarima, model, dest)
    print(f"{args.model} trained on {args.symbol} ({len(series)} bars) -> {dest}{extra}")
    return 0


def cmd_forecast(cfg: RunConfig, args) -> int:
    spec = cfg.model_spec(args.model)
    if spec.family == "persistence":
        raise ConfigError("persistence has no trained artifact; use backtest to score it")
    series = _load_series(cfg, args.symbol)
    steps = args.steps if args.steps is not None else cfg.horizon
    if steps < 1:
        raise ConfigError("--steps must be at least 1")
    model_path = cfg.out_dir / f"{args.model}_{args.symbol}.txt"
    if not model_path.exists():
        raise DataError(f"no saved model at {model_path}; run `train` first")

    lower = upper = None
    if spec.family == "lstm":
        trained = load_lstm(model_path)
        horizon = trained.weights.horizon
        if steps > horizon:
            raise ConfigError(f"model emits {horizon} steps per forecast; --steps too large")
        scaled = apply_scale(series.feature_matrix(trained.feature_names), trained.scale)
        lookback = int(spec.options.get("lookback", cfg.lookback))
        if len(series) < lookback:
            raise DataError(f"need {lookback} bars for the input window, have {len(series)}")
        predicted = predict_multistep(
            trained.weights, scaled[-lookback:], trained.scale, trained.target_col
        )[:steps]
    elif spec.family == "additive":
        model = load_additive(model_path)
        if spec.options.get("boosted", False):
            booster_path = cfg.out_dir / f"{args.model}_{args.symbol}_booster.txt"
            if not booster_path.exists():
                raise DataError(f"no saved booster at {booster_path}; run `train` first")
            ensemble = load_booster(booster_path)
            lags = tuple(int(l) for l in spec.options.get("lags", (1, 2, 3, 4, 5)))
            predicted = hybrid_forecast(model, ensemble, steps, series.column("close"), lags)
        else:
            iv = predict_with_interval(
                model,
                steps,
                n_sims=cfg.interval_sims,
                level=cfg.interval_level,
                seed=cfg.seed,
            )
            predicted, lower, upper = iv.mean, iv.lower, iv.upper
    else:
        predicted = forecast_sarima(load_sarima(model_path), steps)

    lines = ["step,predicted" if lower is None else "step,predicted,lower,upper"]
    for i in range(steps):
        row = f"{i},{fmt(predicted[i])}"
        if lower is not None:
            row += f",{fmt(lower[i])},{fmt(upper[i])}"
        lines.append(row)
    dest = cfg.out_dir / f"forecast_{args.model}_{args.symbol}.csv"
    write_atomic(dest, "\n".join(lines) + "\n")
    for i in range(steps):
        band = "" if lower is None else f"  [{lower[i]:.4f}, {upper[i]:.4f}]"
        print(f"step {i}: {predicted[i]:.4f}{band}")
    print(f"-> {dest}")
    return 0


def cmd_backtest(cfg: RunConfig, args) -> int:
    specs = cfg.model_specs()
    sentiment = _load_sentiment(cfg)
    runs_by_symbol: dict[str, list] = {}
    failures: list[tuple[str, str, int, str]] = []
    failed_models = set()
    spans = {}
    for symbol in cfg.symbols:
        series = _load_series(cfg, symbol)
        folds = rolling_splits(len(series), cfg.n_folds, cfg.test_len)
        spans[symbol] = f"{series.dates[0]}..{series.dates[-1]} ({len(series)} bars)"
        symbol_runs = runs_by_symbol.setdefault(symbol, [])
        for spec in specs:
            result = run_backtest(spec, series, folds, sentiment=sentiment, seed=cfg.seed)
            for fold, message in result.failures:
                failures.append((symbol, spec.name, fold, message))
                failed_models.add(spec.name)
            for run in result.runs:
                symbol_runs.append(run)
                band = (None, None)
                if spec.family == "additive":
                    (train_start, train_end), _ = folds.folds[run.fold - 1]
                    band = additive_interval(
                        spec,
                        series.slice(train_start, train_end),
                        len(run.predicted),
                        sentiment=sentiment,
                        seed=cfg.seed + run.fold,
                        level=cfg.interval_level,
                        n_sims=cfg.interval_sims,
                    )
                forecast_plot(
                    cfg.out_dir / f"plot_{symbol}_{spec.name}_fold{run.fold}.svg",
                    f"{symbol} {spec.name} fold {run.fold}",
                    run.actual,
                    run.predicted,
                    band[0],
                    band[1],
                )

    for symbol, name, fold, message in failures:
        print(f"failure: {symbol} {name} fold {fold}: {message}", file=sys.stderr)
    if failed_models:
        # a model missing folds would make the grid incomparable
        for runs in runs_by_symbol.values():
            runs[:] = [r for r in runs if r.model not in failed_models]
        print(
            f"dropped from report after failures: {', '.join(sorted(failed_models))}",
            file=sys.stderr,
        )
    if all(not runs for runs in runs_by_symbol.values()):
        raise ModelError("every configured model failed; nothing to report")

    metadata = {
        "config_sha256": _config_digest(cfg),
        "seed": cfg.seed,
        "folds": cfg.n_folds,
        "test_len": cfg.test_len,
        "data": spans,
    }
    report = build_report(runs_by_symbol, metadata)
    write_atomic(cfg.out_dir / "report.csv", report_csv(report))
    write_atomic(cfg.out_dir / "report.json", report_json(report))
    print(report_csv(report), end="")
    print(f"-> {cfg.out_dir / 'report.csv'}, {cfg.out_dir / 'report.json'}")
    return 4 if failures else 0


def _option_text(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def cmd_tune(cfg: RunConfig, args) -> int:
    name = cfg.raw.get("tune.model")
    if not name:
        raise ConfigError("tune.model must name the model to tune")
    base = cfg.model_spec(name)
    symbol = cfg.raw.get("tune.symbol") or cfg.symbols[0]
    series = _load_series(cfg, symbol)
    folds = rolling_splits(len(series), cfg.n_folds, cfg.test_len)
    sentiment = _load_sentiment(cfg)

    params = []
    for key, raw_value in cfg.raw.items():
        if not key.startswith("tune.param."):
            continue
        opt = key[len("tune.param.") :]
        if opt not in ALLOWED_OPTIONS[base.family]:
            raise ConfigError(f"{key}: {opt!r} is not an option of family {base.family!r}")
        try:
            candidates = tuple(OPTION_TYPES[opt](c.strip()) for c in raw_value.split("|"))
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}")
        default = base.options.get(opt)
        if default not in candidates:
            default = candidates[0]
        params.append(SearchParam(name=opt, candidates=candidates, default=default))
    if not params:
        raise ConfigError("no tune.param.* keys define a search space")
    space = SearchSpace(tuple(params))

    def objective(options: dict) -> float:
        spec = ModelSpec(name=name, family=base.family, options={**base.options, **options})
        result = run_backtest(spec, series, folds, sentiment=sentiment, seed=cfg.seed)
        if result.failures or not result.runs:
            return float("nan")
        return float(np.mean([rmse(r.predicted, r.actual) for r in result.runs]))

    if args.grid:
        budget = int(cfg.raw.get("tune.max_evals", 10000))
        log = grid_optimize(objective, space, max_evals=budget)
    else:
        log = stepwise_optimize(objective, space)

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    trials_path = cfg.out_dir / "tune_trials.csv"
    tmp = trials_path.with_name(trials_path.name + ".tmp")
    export_trials(log, tmp)
    os.replace(tmp, trials_path)

    best_raw = dict(cfg.raw)
    for opt, value in log.best_config.items():
        best_raw[f"model.{name}.{opt}"] = _option_text(value)
    best_lines = RunConfig(best_raw).resolved_lines()
    best_path = cfg.out_dir / "best_config.txt"
    write_atomic(best_path, "\n".join(best_lines) + "\n")

    settings = ", ".join(f"{k}={_option_text(v)}" for k, v in log.best_config.items())
    print(f"{len(log.trials)} evaluations on {symbol}; best mean RMSE {log.best_value:.6f}")
    print(f"best: {settings}")
    print(f"-> {best_path}, {trials_path}")
    return 0


def cmd_report(cfg: RunConfig, args) -> int:
    path = cfg.out_dir / "report.json"
    if not path.exists():
        raise DataError(f"no report at {path}; run `backtest` first")
    payload = json.loads(path.read_text())
    symbols = payload["symbols"]
    print("model," + ",".join(symbols))
    for model in payload["models"]:
        row = [model]
        for symbol in symbols:
            cell = payload["results"].get(model, {}).get(symbol)
            row.append("" if cell is None else repr(cell["average"]))
        print(",".join(row))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stockcast",
        description="OHLCV forecasting: LSTM, additive trend models, SARIMA, and a persistence baseline.",
    )
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--seed", type=int, help="override the configured master seed")
    parser.add_argument("--out", help="override the configured output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a price CSV and store it in the data directory")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--csv", help="local CSV file to ingest")
    source.add_argument("--from-url", help="endpoint template with {symbol}/{start}/{end}")
    p.add_argument("--symbol", required=True)
    p.add_argument("--start", help="start date substituted into the URL template")
    p.add_argument("--end", help="end date substituted into the URL template")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("sentiment", help="decode news documents into a daily score file")
    p.set_defaults(func=cmd_sentiment)

    p = sub.add_parser("train", help="fit one model on a full series and save it")
    p.add_argument("--model", required=True, help="model name from the config")
    p.add_argument("--symbol", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("forecast", help="forecast forward from a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--symbol", required=True)
    p.add_argument("--steps", type=int, help="steps ahead (default: window.horizon)")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("backtest", help="rolling-origin comparison of all configured models")
    p.set_defaults(func=cmd_backtest)

    p = sub.add_parser("tune", help="stepwise hyperparameter search over tune.param.* lists")
    p.add_argument("--grid", action="store_true", help="exhaustive grid instead of stepwise")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("report", help="print the saved comparison grid")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        _emit_resolved(cfg)
        return args.func(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 4
    except StockcastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
