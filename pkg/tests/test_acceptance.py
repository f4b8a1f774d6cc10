"""Whole-package acceptance gate: ten numbered go/no-go checks.

Each test owns one criterion and prints a single `criterion N PASS` or
`criterion N FAIL` line as it finishes (run with `pytest -s` to watch the
lines stream).  Oracles are deliberately independent of the code under
test: exhaustive path enumeration for Viterbi, central finite differences
for LSTM gradients, closed-form synthetic series for the additive fit and
SARIMA, and brute-force split scans for the histogram trees.  Criteria
with a stated runtime budget enforce it with a wall-clock assert.
"""

import dataclasses
import datetime as dt
import functools
import itertools
import time
from pathlib import Path

import numpy as np

from stockcast.additive import (
    AdditiveConfig,
    SeasonalityConfig,
    fit as additive_fit,
    predict_with_interval,
)
from stockcast.boosting import BoostConfig, fit_booster
from stockcast.cli import main
from stockcast.evaluation import ModelSpec, build_report, report_csv, rmse, run_backtest
from stockcast.lstm import (
    LstmWeights,
    TrainConfig,
    bptt_gradients,
    forward_sequence,
    train as train_lstm,
)
from stockcast.market_data import (
    OhlcvBar,
    OhlcvSeries,
    WindowedDataset,
    parse_csv,
    rolling_splits,
    scale_minmax,
    split_sequences,
)
from stockcast.sarima import (
    SarimaOrder,
    combined_polys,
    difference,
    fit as sarima_fit,
    integrate,
)
from stockcast.sentiment import HmmModel, viterbi
from stockcast.tuning import SearchParam, SearchSpace, grid_optimize, stepwise_optimize

DATA_DIR = Path(__file__).resolve().parents[1] / "data"
SYMBOLS = ("BANKA", "BANKB", "BANKC", "BANKD")


def criterion(number: int, label: str):
    """Print one verdict line per criterion, pass or fail."""

    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"criterion {number} FAIL: {label}")
                raise
            print(f"criterion {number} PASS: {label}")

        return run

    return wrap


def make_series(close: np.ndarray, symbol: str = "TEST") -> OhlcvSeries:
    """Wrap a close path in consistent OHLC bars on consecutive dates."""
    bars = []
    day = dt.date(2024, 1, 2)
    prev = float(close[0])
    for i, c in enumerate(np.asarray(close, dtype=float)):
        o = prev if i else float(c)
        bars.append(
            OhlcvBar(
                date=day,
                open=o,
                high=max(o, float(c)) * 1.01,
                low=min(o, float(c)) * 0.99,
                close=float(c),
                volume=1000 + i,
            )
        )
        day += dt.timedelta(days=1)
        prev = float(c)
    return OhlcvSeries(symbol, tuple(bars))


@criterion(1, "Viterbi equals exhaustive enumeration on 200 random models")
def test_viterbi_against_enumeration():
    started = time.perf_counter()
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(2, 5))
        vocab = int(rng.integers(2, 6))
        length = int(rng.integers(1, 9))
        transition = rng.uniform(0.05, 1.0, size=(n, n))
        transition /= transition.sum(axis=1, keepdims=True)
        emission = rng.uniform(0.05, 1.0, size=(n, vocab))
        emission /= emission.sum(axis=1, keepdims=True)
        initial = rng.uniform(0.05, 1.0, size=n)
        initial /= initial.sum()
        model = HmmModel(
            labels=tuple(f"s{i}" for i in range(n)),
            transition=transition,
            emission=emission,
            initial=initial,
        )
        obs = tuple(int(v) for v in rng.integers(0, vocab, size=length))
        decoded = viterbi(model, obs)

        log_init = np.log(initial)
        log_trans = np.log(transition)
        log_emit = np.log(emission)
        paths = np.array(
            list(itertools.product(range(n), repeat=length)), dtype=int
        )
        log_prob = log_init[paths[:, 0]] + log_emit[paths[:, 0], obs[0]]
        for t in range(1, length):
            log_prob = (
                log_prob
                + log_trans[paths[:, t - 1], paths[:, t]]
                + log_emit[paths[:, t], obs[t]]
            )
        best = float(log_prob.max())
        assert abs(decoded.log_prob - best) < 1e-10
        argmax_set = paths[log_prob >= best - 1e-12]
        assert np.any(np.all(argmax_set == np.array(decoded.states), axis=1))
    assert time.perf_counter() - started < 10.0


def _forward_loss(dataset: WindowedDataset, w: LstmWeights) -> float:
    """Loss recomputed sequence by sequence, independent of bptt_gradients."""
    preds = np.stack(
        [forward_sequence(dataset.inputs[k], w) for k in range(len(dataset))]
    )
    return float(np.mean((preds - dataset.targets) ** 2))


@criterion(2, "BPTT gradients match central finite differences")
def test_lstm_gradients_against_finite_differences():
    started = time.perf_counter()
    rng = np.random.default_rng(23)
    h = 1e-5
    worst = 0.0
    for _ in range(20):
        hidden = int(rng.integers(2, 5))
        feats = int(rng.integers(1, 4))
        horizon = int(rng.integers(1, 4))
        lookback = int(rng.integers(2, 6))
        n = int(rng.integers(2, 6))
        combined = hidden + feats

        def arr(*shape):
            return rng.uniform(-0.5, 0.5, size=shape)

        w = LstmWeights(
            w_f=arr(hidden, combined),
            w_i=arr(hidden, combined),
            w_c=arr(hidden, combined),
            w_o=arr(hidden, combined),
            b_f=arr(hidden),
            b_i=arr(hidden),
            b_c=arr(hidden),
            b_o=arr(hidden),
            head_w=arr(horizon, hidden),
            head_b=arr(horizon),
        )
        dataset = WindowedDataset(
            inputs=rng.uniform(0.0, 1.0, size=(n, lookback, feats)),
            targets=rng.uniform(0.0, 1.0, size=(n, horizon)),
            target_feature=0,
        )
        _, grads = bptt_gradients(dataset, w)
        arrays = dict(w.named_arrays())
        for name, grad in grads.named_arrays():
            base = arrays[name]
            numeric = np.zeros_like(grad)
            it = np.nditer(base, flags=["multi_index"])
            while not it.finished:
                idx = it.multi_index
                bumped = base.copy()
                bumped[idx] += h
                up = _forward_loss(dataset, LstmWeights(**{**arrays, name: bumped}))
                bumped = base.copy()
                bumped[idx] -= h
                down = _forward_loss(dataset, LstmWeights(**{**arrays, name: bumped}))
                numeric[idx] = (up - down) / (2.0 * h)
                it.iternext()
            scale = max(float(np.max(np.abs(numeric))), 1e-12)
            worst = max(worst, float(np.max(np.abs(grad - numeric))) / scale)
    assert worst < 1e-4
    assert time.perf_counter() - started < 30.0


@criterion(3, "LSTM learns a sine wave and retrains bit-identically")
def test_lstm_sine_learning_and_determinism():
    started = time.perf_counter()
    t = np.arange(400, dtype=float)
    matrix = np.sin(2 * np.pi * t / 40.0).reshape(-1, 1)
    scaled, _ = scale_minmax(matrix)
    dataset = split_sequences(scaled, lookback=30, horizon=5, target_col=0)
    cfg = TrainConfig(hidden=8, epochs=200, learning_rate=1e-2, seed=7, batch_size=32)
    w1, hist1 = train_lstm(dataset, cfg)
    assert hist1[-1] < 0.5 * hist1[0]
    w2, hist2 = train_lstm(dataset, cfg)
    assert hist2 == hist1
    for (name1, a1), (name2, a2) in zip(w1.named_arrays(), w2.named_arrays()):
        assert name1 == name2
        assert np.array_equal(a1, a2)
    assert time.perf_counter() - started < 60.0


@criterion(4, "additive fit recovers trend/seasonality; bands cover as stated")
def test_additive_recovery_and_interval_coverage():
    t = np.arange(200, dtype=float)
    clean = 0.5 * t + 3.0 + 2.0 * np.cos(2 * np.pi * t / 20.0)
    cfg = AdditiveConfig(
        n_changepoints=0, seasonalities=(SeasonalityConfig("s20", 20.0, 1),)
    )
    model = additive_fit(clean, cfg)
    assert abs(model.trend.k - 0.5) <= 0.01 * 0.5
    assert abs(model.trend.m - 3.0) <= 0.01 * 3.0
    assert abs(model.seasonalities[0].cos_coef[0] - 2.0) <= 0.01 * 2.0
    assert abs(model.seasonalities[0].sin_coef[0]) < 0.02

    exact = dataclasses.replace(model, residual_sigma=0.0)
    band = predict_with_interval(exact, future_len=12, n_sims=200, level=0.8, seed=0)
    assert np.array_equal(band.lower, band.mean)
    assert np.array_equal(band.upper, band.mean)

    rng = np.random.default_rng(29)
    noisy = clean + rng.normal(0.0, 1.0, size=200)
    noisy_model = additive_fit(noisy, cfg)
    horizon = 20
    band = predict_with_interval(
        noisy_model, future_len=horizon, n_sims=10000, level=0.8, seed=5
    )
    future_t = np.arange(200, 200 + horizon, dtype=float)
    future_mean = 0.5 * future_t + 3.0 + 2.0 * np.cos(2 * np.pi * future_t / 20.0)
    futures = future_mean + rng.normal(0.0, 1.0, size=(500, horizon))
    covered = (futures >= band.lower) & (futures <= band.upper)
    coverage = float(np.mean(covered))
    assert 0.70 <= coverage <= 0.90


@criterion(5, "SARIMA round-trips differencing, recovers AR(1), keeps roots outside")
def test_sarima_roundtrip_recovery_and_stability():
    started = time.perf_counter()
    rng = np.random.default_rng(31)
    series = rng.normal(0.0, 1.0, size=120)
    for b in range(3):
        for B in range(2):
            for m in range(1, 13):
                diffed, state = difference(series, b, B, m)
                assert diffed.shape[0] == 120 - b - B * m
                back = integrate(diffed, state)
                assert np.max(np.abs(back - series)) < 1e-9

    noise = rng.normal(0.0, 1.0, size=2100)
    x = np.zeros(2100)
    for i in range(1, 2100):
        x[i] = 0.6 * x[i - 1] + noise[i]
    ar1 = sarima_fit(x[100:], SarimaOrder(1, 0, 0))
    assert 0.5 <= float(ar1.params.phi[0]) <= 0.7

    t = np.arange(2000, dtype=float)
    y = (
        100.0
        + 0.02 * t
        + 3.0 * np.sin(2 * np.pi * t / 15.0)
        + np.cumsum(rng.normal(0.0, 0.3, size=2000))
    )
    order = SarimaOrder(1, 1, 1, 3, 3, 1, 15)
    model = sarima_fit(y, order)
    for poly in combined_polys(model.params, model.order):
        if poly.shape[0] > 1:
            roots = np.roots(poly[::-1])
            assert roots.size == 0 or float(np.min(np.abs(roots))) > 1.0
    assert time.perf_counter() - started < 120.0


@criterion(6, "stepwise visits sum(|h_i|), grid visits prod(|h_i|), optima agree")
def test_tuner_evaluation_counts_and_optimum():
    space = SearchSpace(
        (
            SearchParam("x", (1.0, 2.0, 3.0), default=1.0),
            SearchParam("y", (0.0, 1.0, 3.0, 7.0), default=0.0),
        )
    )
    assert space.stepwise_count() == 7
    assert space.grid_count() == 12

    def objective(conf):
        return (conf["x"] - 2.0) ** 2 + (conf["y"] - 3.0) ** 2

    stepwise = stepwise_optimize(objective, space)
    grid = grid_optimize(objective, space)
    assert len(stepwise.trials) == 7
    assert len(grid.trials) == 12
    assert grid.best_config == {"x": 2.0, "y": 3.0}
    assert stepwise.best_config == grid.best_config
    assert stepwise.best_value == grid.best_value == 0.0


def _exhaustive_best_split(X, y, lam, min_leaf):
    """Brute-force scan over every distinct-value midpoint."""
    n = y.shape[0]
    total = y.sum()
    parent = total * total / (n + lam)
    best = (0.0, -1, 0.0)
    for f in range(X.shape[1]):
        vals = np.unique(X[:, f])
        for thr in (vals[:-1] + vals[1:]) / 2.0:
            mask = X[:, f] <= thr
            nl = int(mask.sum())
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            sl = y[mask].sum()
            sr = total - sl
            gain = sl * sl / (nl + lam) + sr * sr / (nr + lam) - parent
            if gain > best[0] + 1e-12:
                best = (gain, f, thr)
    return best


@criterion(7, "boosting MSE never increases; leaves and splits match brute force")
def test_boosting_monotonicity_and_split_oracles():
    rng = np.random.default_rng(37)
    X = rng.normal(0.0, 1.0, size=(160, 4))
    y = X @ np.array([1.5, -2.0, 0.5, 0.0]) + np.sin(3.0 * X[:, 0])
    y += rng.normal(0.0, 0.5, size=160)
    cfg = BoostConfig(
        n_trees=50,
        max_leaves=6,
        min_samples_leaf=4,
        l2_leaf_penalty=1.0,
        learning_rate=0.3,
        max_bins=32,
    )
    ens = fit_booster(X, y, cfg)
    assert len(ens.trees) == 50
    pred = np.full(160, ens.base_score)
    last = float(np.mean((y - pred) ** 2))
    for tree in ens.trees:
        pred = pred + ens.learning_rate * tree.predict(X)
        mse = float(np.mean((y - pred) ** 2))
        assert mse <= last + 1e-9
        last = mse

    stump_y = rng.normal(5.0, 1.0, size=30)
    stump = fit_booster(
        rng.normal(0.0, 1.0, size=(30, 2)),
        stump_y,
        BoostConfig(
            n_trees=1,
            max_leaves=1,
            learning_rate=1.0,
            l2_leaf_penalty=0.0,
            min_samples_leaf=1,
        ),
    )
    flat = stump.predict(rng.normal(0.0, 1.0, size=(30, 2)))
    assert float(np.ptp(flat)) == 0.0
    np.testing.assert_allclose(flat, np.full(30, stump_y.mean()), rtol=0, atol=1e-12)

    small_X = rng.normal(0.0, 1.0, size=(48, 3))
    small_y = rng.normal(0.0, 1.0, size=48)
    single = fit_booster(
        small_X,
        small_y,
        BoostConfig(
            n_trees=1,
            max_leaves=2,
            learning_rate=1.0,
            l2_leaf_penalty=0.3,
            min_samples_leaf=4,
            max_bins=64,
        ),
    )
    root = single.trees[0].root
    gain, feature, threshold = _exhaustive_best_split(
        small_X, small_y - small_y.mean(), 0.3, 4
    )
    assert gain > 0
    assert root.feature == feature
    assert abs(root.threshold - threshold) <= 1e-12


@criterion(8, "RMSE is exact; no fold reads test data; report grid is 4x4")
def test_rmse_leakage_probe_and_report_grid():
    assert abs(rmse([1.0, 2.0, 3.0], [2.0, 2.0, 4.0]) - np.sqrt(2.0 / 3.0)) < 1e-12

    rng = np.random.default_rng(41)
    t = np.arange(90)
    close = 100.0 + 0.05 * t + 3.0 * np.sin(2 * np.pi * t / 20) + rng.normal(0, 0.5, 90)
    folds = rolling_splits(90, 3, 5)
    specs = [
        ModelSpec("naive", "persistence"),
        ModelSpec(
            "lstm",
            "lstm",
            {"lookback": 6, "hidden": 4, "epochs": 2, "learning_rate": 0.01},
        ),
        ModelSpec("additive", "additive", {"n_changepoints": 4}),
        ModelSpec("sarima", "sarima", {"order": (1, 1, 0)}),
    ]
    baseline = {
        s.name: run_backtest(s, make_series(close), folds, seed=2) for s in specs
    }
    for spec in specs:
        assert not baseline[spec.name].failures
    for fold_idx, (_, (test_start, _)) in enumerate(folds, start=1):
        mutated_close = close.copy()
        mutated_close[test_start:] *= 1.5
        mutated = make_series(mutated_close)
        for spec in specs:
            result = run_backtest(spec, mutated, folds, seed=2)
            want = next(r for r in baseline[spec.name].runs if r.fold == fold_idx)
            got = next(r for r in result.runs if r.fold == fold_idx)
            assert np.array_equal(got.predicted, want.predicted), (
                f"{spec.name} fold {fold_idx} saw test-range data"
            )

    runs_by_symbol = {}
    for symbol in SYMBOLS:
        series = parse_csv((DATA_DIR / f"{symbol}.csv").read_bytes(), symbol)
        series = series.slice(len(series) - 140, len(series))
        grid_folds = rolling_splits(len(series), 2, 5)
        runs = []
        for spec in specs:
            result = run_backtest(spec, series, grid_folds, seed=2)
            assert not result.failures
            runs.extend(result.runs)
        runs_by_symbol[symbol] = runs
    report = build_report(runs_by_symbol)
    assert report.models == ("naive", "lstm", "additive", "sarima")
    assert report.symbols == SYMBOLS
    assert len(report.cells) == 16
    assert all(len(folds) == 2 for folds in report.cells.values())
    lines = report_csv(report).strip().split("\n")
    assert len(lines) == 5
    assert all(len(line.split(",")) == 5 for line in lines)


@criterion(9, "CLI ingests, backtests 4 families x 5 folds, reruns byte-identically")
def test_cli_end_to_end_reproducible(tmp_path):
    started = time.perf_counter()
    data = tmp_path / "data"
    data.mkdir()
    conf = tmp_path / "run.conf"
    conf.write_text(
        f"data.dir={data}\n"
        f"data.symbols={','.join(SYMBOLS)}\n"
        "models=persistence,lstm,additive,sarima\n"
        "model.lstm.epochs=8\n"
        "model.lstm.hidden=8\n"
        "model.lstm.lookback=16\n"
        "model.lstm.learning_rate=0.01\n"
        "model.additive.n_changepoints=8\n"
        "model.sarima.order=1,1,1\n"
        "folds.count=5\n"
        "folds.test_len=5\n"
        "seed=3\n"
        "interval.sims=200\n"
    )
    ingest_out = tmp_path / "ingest_out"
    for symbol in SYMBOLS:
        code = main(
            [
                "--config",
                str(conf),
                "--out",
                str(ingest_out),
                "ingest",
                "--csv",
                str(DATA_DIR / f"{symbol}.csv"),
                "--symbol",
                symbol,
            ]
        )
        assert code == 0
        assert (data / f"{symbol}.csv").exists()

    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    for out in (out1, out2):
        code = main(["--config", str(conf), "--out", str(out), "backtest"])
        assert code == 0

    report = (out1 / "report.csv").read_text()
    lines = report.strip().split("\n")
    assert len(lines) == 5
    assert lines[0] == "model," + ",".join(SYMBOLS)
    svgs = sorted(p.name for p in out1.glob("*.svg"))
    assert len(svgs) == 4 * 4 * 5
    assert (out1 / "report.json").exists()

    names1 = sorted(p.name for p in out1.iterdir())
    names2 = sorted(p.name for p in out2.iterdir())
    assert names1 == names2
    for name in names1:
        if name == "resolved_config.txt":
            continue
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name
    assert time.perf_counter() - started < 300.0


def _aux_signal_series(seed: int, length: int = 240) -> OhlcvSeries:
    """Close follows a latent AR(1) increment that the same bar's high/low
    spreads and volume reveal, so the extra channels predict the next move."""
    rng = np.random.default_rng(seed)
    x = np.zeros(length)
    for i in range(1, length):
        x[i] = 0.85 * x[i - 1] + rng.normal(0.0, 0.4)
    close = np.empty(length)
    close[0] = 300.0
    for i in range(length - 1):
        close[i + 1] = close[i] + x[i] + rng.normal(0.0, 0.05)
    assert close.min() > 1.0
    bars = []
    day = dt.date(2023, 1, 2)
    prev = close[0]
    for i in range(length):
        o = float(prev) if i else float(close[0]) * 0.999
        c = float(close[i])
        hi = max(o, c) + 0.25 + max(float(x[i]), 0.0)
        lo = min(o, c) - 0.25 - max(-float(x[i]), 0.0)
        volume = int(1_000_000 * (2.0 + np.tanh(float(x[i]))))
        bars.append(OhlcvBar(day, o, hi, lo, c, volume))
        day += dt.timedelta(days=1)
        prev = close[i]
    return OhlcvSeries(f"SYN{seed}", tuple(bars))


@criterion(10, "multivariate LSTM beats univariate on signal-rich data, 4 of 5 seeds")
def test_multivariate_lstm_uses_auxiliary_channels():
    base = {"lookback": 4, "hidden": 8, "epochs": 40, "learning_rate": 0.02}
    wins = 0
    margins = []
    for seed in range(5):
        series = _aux_signal_series(seed)
        folds = rolling_splits(len(series), 5, 4)
        means = {}
        for name, multivariate in (("multi", True), ("uni", False)):
            spec = ModelSpec(name, "lstm", {**base, "multivariate": multivariate})
            result = run_backtest(spec, series, folds, seed=seed)
            assert not result.failures
            means[name] = float(
                np.mean([rmse(r.predicted, r.actual) for r in result.runs])
            )
        margins.append(means["uni"] - means["multi"])
        if means["multi"] <= means["uni"]:
            wins += 1
    assert wins >= 4, f"multivariate won only {wins}/5 seeds (margins {margins})"
