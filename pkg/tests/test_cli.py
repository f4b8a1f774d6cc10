"""End-to-end command tests: every subcommand, exit codes, determinism.

Each test drives `main()` in-process with a throwaway config, so the
suite covers argument wiring and error mapping without subprocess cost.
The URL ingest test runs a real loopback HTTP server.
"""

import datetime as dt
import http.server
import json
import threading
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from stockcast.cli import main
from stockcast.config import load_config
from stockcast.evaluation import rmse, run_backtest
from stockcast.market_data import OhlcvBar, OhlcvSeries, parse_csv, rolling_splits, serialize_csv
from stockcast.sentiment import (
    load_lexicon,
    load_scores,
    read_documents,
    score_documents,
    supervised_estimate,
)

N_BARS = 84

LEXICON = "up\t1\ngood\t1\nbad\t3\ndown\t3\nflat\t2\nmarket\t2\n"

DOCS = (
    "2024-04-22\twire\tmarket up, good quarter\n"
    "2024-04-23\twire\tbad day, market down 2\n"
    "2024-04-23\tblog\tflat market, nothing new\n"
    "2024-04-25\twire\tgood good up\n"
)

CORPUS = (
    "positive\tgood market, up again\n"
    "positive\tup up good\n"
    "negative\tbad market, down hard\n"
    "negative\tdown and bad\n"
    "neutral\tflat market today\n"
    "neutral\tmarket flat, quiet\n"
)


def make_close(n: int = N_BARS, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    return 100.0 + 0.05 * t + 3.0 * np.sin(2 * np.pi * t / 20) + rng.normal(0, 0.5, n)


def series_csv_bytes(n: int = N_BARS, seed: int = 0, symbol: str = "TEST") -> bytes:
    close = make_close(n, seed)
    bars = []
    day = dt.date(2024, 1, 2)
    prev = float(close[0])
    for i, c in enumerate(close):
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
    return serialize_csv(OhlcvSeries(symbol, tuple(bars)))


BASE_CONF = """\
data.dir={data}
data.symbols=TEST
models=persistence,lstm,additive,sarima
model.lstm.epochs=2
model.lstm.hidden=4
model.lstm.lookback=8
model.additive.n_changepoints=5
model.sarima.order=0,1,1
folds.count=2
interval.sims=120
"""


@pytest.fixture
def workspace(tmp_path):
    """Config file plus an ingested TEST series, ready for any command."""
    data = tmp_path / "data"
    data.mkdir()
    (data / "TEST.csv").write_bytes(series_csv_bytes())
    conf = tmp_path / "run.conf"
    conf.write_text(BASE_CONF.format(data=data))
    return tmp_path, conf


def run(conf, out, *argv) -> int:
    return main(["--config", str(conf), "--out", str(out), *argv])


@contextmanager
def quote_server(payload: bytes):
    handler = type(
        "QuoteHandler",
        (http.server.BaseHTTPRequestHandler,),
        {
            "do_GET": lambda self: (
                self.send_response(200),
                self.send_header("Content-Type", "text/csv"),
                self.end_headers(),
                self.wfile.write(payload),
            ),
            "log_message": lambda self, *args: None,
        },
    )
    server = http.server.ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_port}/quotes/{{symbol}}?s={{start}}&e={{end}}"
    finally:
        server.shutdown()
        thread.join()


class TestIngest:
    def test_csv_ingest_summary(self, workspace, capsys):
        tmp, conf = workspace
        src = tmp / "raw.csv"
        src.write_bytes(series_csv_bytes(symbol="NEW"))
        assert run(conf, tmp / "out", "ingest", "--csv", str(src), "--symbol", "NEW") == 0
        stored = tmp / "data" / "NEW.csv"
        assert stored.exists()
        out = capsys.readouterr().out
        assert f"NEW: {N_BARS} bars" in out
        assert "2024-01-02" in out

    def test_canonical_rewrite(self, workspace):
        tmp, conf = workspace
        src = tmp / "raw.csv"
        src.write_bytes(series_csv_bytes(symbol="NEW"))
        run(conf, tmp / "out", "ingest", "--csv", str(src), "--symbol", "NEW")
        stored = (tmp / "data" / "NEW.csv").read_bytes()
        assert stored == serialize_csv(parse_csv(src.read_bytes(), "NEW"))

    def test_bad_row_exit_code_and_line(self, workspace, capsys):
        tmp, conf = workspace
        src = tmp / "bad.csv"
        src.write_text("date,open,high,low,close,volume\n2024-01-02,1,2,0.5,oops,10\n")
        assert run(conf, tmp / "out", "ingest", "--csv", str(src), "--symbol", "X") == 3
        err = capsys.readouterr().err
        assert "offending line" in err
        assert "oops" in err
        assert "line 2" in err

    def test_missing_input_file(self, workspace, capsys):
        tmp, conf = workspace
        assert run(conf, tmp / "out", "ingest", "--csv", str(tmp / "no.csv"), "--symbol", "X") == 3

    def test_from_url_matches_file_ingest(self, workspace):
        tmp, conf = workspace
        payload = series_csv_bytes(symbol="NET")
        src = tmp / "net.csv"
        src.write_bytes(payload)
        run(conf, tmp / "out", "ingest", "--csv", str(src), "--symbol", "NET")
        via_file = (tmp / "data" / "NET.csv").read_bytes()
        (tmp / "data" / "NET.csv").unlink()
        with quote_server(payload) as template:
            code = run(
                conf, tmp / "out", "ingest",
                "--from-url", template, "--symbol", "NET",
                "--start", "2024-01-02", "--end", "2024-04-30",
            )
        assert code == 0
        assert (tmp / "data" / "NET.csv").read_bytes() == via_file

    def test_fetch_failure_is_data_error(self, workspace, capsys):
        tmp, conf = workspace
        code = run(
            conf, tmp / "out", "ingest",
            "--from-url", "http://127.0.0.1:9/quotes/{symbol}", "--symbol", "X",
        )
        assert code == 3


class TestSentiment:
    def write_inputs(self, tmp, conf, docs=DOCS):
        (tmp / "lex.tsv").write_text(LEXICON)
        (tmp / "docs.tsv").write_text(docs)
        (tmp / "corpus.tsv").write_text(CORPUS)
        extra = (
            f"sentiment.lexicon={tmp / 'lex.tsv'}\n"
            f"sentiment.docs={tmp / 'docs.tsv'}\n"
            f"sentiment.corpus={tmp / 'corpus.tsv'}\n"
            f"sentiment.scores={tmp / 'scores.csv'}\n"
        )
        conf.write_text(conf.read_text() + extra)

    def test_scores_match_library_pipeline(self, workspace, capsys):
        tmp, conf = workspace
        self.write_inputs(tmp, conf)
        assert run(conf, tmp / "out", "sentiment") == 0
        written = load_scores(tmp / "scores.csv")
        lexicon = load_lexicon(tmp / "lex.tsv")
        corpus = []
        for line in CORPUS.strip().splitlines():
            label, text = line.split("\t")
            from stockcast.sentiment import DEFAULT_STATES, tokenize, words_to_tokens

            tokens = words_to_tokens(tokenize(text), lexicon)
            corpus.append((tokens, (DEFAULT_STATES.index(label),) * len(tokens)))
        model = supervised_estimate(corpus)
        docs = read_documents(tmp / "docs.tsv", lexicon)
        expect = score_documents(model, docs)
        assert written.dates == tuple(expect.dates)
        assert np.array_equal(written.scores, expect.scores)
        assert np.all(np.abs(written.scores) <= 1.0)

    def test_empty_documents_warns(self, workspace, capsys):
        tmp, conf = workspace
        self.write_inputs(tmp, conf, docs="# nothing here\n")
        assert run(conf, tmp / "out", "sentiment") == 0
        assert "no scoreable documents" in capsys.readouterr().err
        assert (tmp / "scores.csv").read_text() == "date,score\n"

    def test_needs_model_or_corpus(self, workspace, capsys):
        tmp, conf = workspace
        (tmp / "lex.tsv").write_text(LEXICON)
        (tmp / "docs.tsv").write_text(DOCS)
        conf.write_text(
            conf.read_text()
            + f"sentiment.lexicon={tmp / 'lex.tsv'}\nsentiment.docs={tmp / 'docs.tsv'}\n"
        )
        assert run(conf, tmp / "out", "sentiment") == 2

    def test_missing_lexicon_is_data_error(self, workspace):
        tmp, conf = workspace
        conf.write_text(conf.read_text() + "sentiment.lexicon=/nope/lex.tsv\n")
        assert run(conf, tmp / "out", "sentiment") == 3


class TestTrainForecast:
    def test_sarima_roundtrip(self, workspace, capsys):
        tmp, conf = workspace
        out = tmp / "out"
        assert run(conf, out, "train", "--model", "sarima", "--symbol", "TEST") == 0
        assert (out / "sarima_TEST.txt").exists()
        assert run(conf, out, "forecast", "--model", "sarima", "--symbol", "TEST", "--steps", "3") == 0
        rows = (out / "forecast_sarima_TEST.csv").read_text().splitlines()
        assert rows[0] == "step,predicted"
        assert len(rows) == 4
        assert all(np.isfinite(float(r.split(",")[1])) for r in rows[1:])

    def test_additive_interval_columns(self, workspace):
        tmp, conf = workspace
        out = tmp / "out"
        run(conf, out, "train", "--model", "additive", "--symbol", "TEST")
        run(conf, out, "forecast", "--model", "additive", "--symbol", "TEST", "--steps", "4")
        rows = (out / "forecast_additive_TEST.csv").read_text().splitlines()
        assert rows[0] == "step,predicted,lower,upper"
        for row in rows[1:]:
            _, mid, lo, hi = (float(v) for v in row.split(","))
            assert lo <= mid <= hi

    def test_boosted_additive_saves_booster(self, workspace):
        tmp, conf = workspace
        conf.write_text(conf.read_text() + "model.additive.boosted=true\nmodel.additive.n_trees=5\n")
        out = tmp / "out"
        assert run(conf, out, "train", "--model", "additive", "--symbol", "TEST") == 0
        assert (out / "additive_TEST_booster.txt").exists()
        assert run(conf, out, "forecast", "--model", "additive", "--symbol", "TEST") == 0

    def test_lstm_roundtrip_and_step_cap(self, workspace):
        tmp, conf = workspace
        out = tmp / "out"
        assert run(conf, out, "train", "--model", "lstm", "--symbol", "TEST") == 0
        assert run(conf, out, "forecast", "--model", "lstm", "--symbol", "TEST") == 0
        assert run(conf, out, "forecast", "--model", "lstm", "--symbol", "TEST", "--steps", "99") == 2

    def test_persistence_refuses_training(self, workspace, capsys):
        tmp, conf = workspace
        assert run(conf, tmp / "out", "train", "--model", "persistence", "--symbol", "TEST") == 2

    def test_sentiment_spec_refuses_training(self, workspace):
        tmp, conf = workspace
        conf.write_text(conf.read_text() + "model.lstm.use_sentiment=true\n")
        assert run(conf, tmp / "out", "train", "--model", "lstm", "--symbol", "TEST") == 2

    def test_forecast_without_model_file(self, workspace):
        tmp, conf = workspace
        assert run(conf, tmp / "out", "forecast", "--model", "sarima", "--symbol", "TEST") == 3

    def test_train_unknown_symbol(self, workspace):
        tmp, conf = workspace
        assert run(conf, tmp / "out", "train", "--model", "sarima", "--symbol", "NOPE") == 3


class TestBacktest:
    def test_outputs_and_grid(self, workspace, capsys):
        tmp, conf = workspace
        out = tmp / "out"
        assert run(conf, out, "backtest") == 0
        report = json.loads((out / "report.json").read_text())
        assert report["models"] == ["persistence", "lstm", "additive", "sarima"]
        assert report["symbols"] == ["TEST"]
        for model in report["models"]:
            detail = report["results"][model]["TEST"]
            assert len(detail["fold_rmse"]) == 2
        svgs = sorted(p.name for p in out.glob("plot_*.svg"))
        assert len(svgs) == 8
        assert all((out / Path(name).with_suffix(".csv")).exists() for name in svgs)
        grid = (out / "report.csv").read_text().splitlines()
        assert grid[0] == "model,TEST"
        assert capsys.readouterr().out.startswith("model,TEST")

    def test_additive_plot_has_band(self, workspace):
        tmp, conf = workspace
        out = tmp / "out"
        run(conf, out, "backtest")
        additive = (out / "plot_TEST_additive_fold1.csv").read_text().splitlines()[0]
        naive = (out / "plot_TEST_persistence_fold1.csv").read_text().splitlines()[0]
        assert additive == "step,actual,predicted,lower,upper"
        assert naive == "step,actual,predicted"

    def test_rerun_byte_identical(self, workspace):
        tmp, conf = workspace
        assert run(conf, tmp / "a", "backtest") == 0
        assert run(conf, tmp / "b", "backtest") == 0
        names = sorted(p.name for p in (tmp / "a").iterdir() if p.name != "resolved_config.txt")
        assert names == sorted(
            p.name for p in (tmp / "b").iterdir() if p.name != "resolved_config.txt"
        )
        for name in names:
            assert (tmp / "a" / name).read_bytes() == (tmp / "b" / name).read_bytes(), name

    def test_seed_changes_output(self, workspace):
        tmp, conf = workspace
        run(conf, tmp / "a", "backtest")
        assert main(["--config", str(conf), "--out", str(tmp / "c"), "--seed", "9", "backtest"]) == 0
        a = json.loads((tmp / "a" / "report.json").read_text())
        c = json.loads((tmp / "c" / "report.json").read_text())
        assert a["results"]["lstm"] != c["results"]["lstm"]
        assert a["metadata"]["seed"] == 0
        assert c["metadata"]["seed"] == 9

    @pytest.mark.filterwarnings("ignore:differencing consumes")
    def test_failing_model_dropped_with_exit_4(self, workspace, capsys):
        tmp, conf = workspace
        # seasonal period far beyond the series: every fold must fail
        conf.write_text(
            conf.read_text().replace(
                "model.sarima.order=0,1,1", "model.sarima.order=2,1,2,3,3,1,60"
            )
        )
        out = tmp / "out"
        assert run(conf, out, "backtest") == 4
        err = capsys.readouterr().err
        assert "failure: TEST sarima" in err
        assert "dropped from report" in err
        report = json.loads((out / "report.json").read_text())
        assert "sarima" not in report["models"]
        assert "persistence" in report["models"]

    def test_missing_series_exit_3(self, workspace):
        tmp, conf = workspace
        (tmp / "data" / "TEST.csv").unlink()
        assert run(conf, tmp / "out", "backtest") == 3

    def test_unknown_config_key_exit_2(self, workspace):
        tmp, conf = workspace
        conf.write_text(conf.read_text() + "nonsense=1\n")
        assert run(conf, tmp / "out", "backtest") == 2

    def test_resolved_config_written_with_overrides(self, workspace):
        tmp, conf = workspace
        main(["--config", str(conf), "--out", str(tmp / "out"), "--seed", "5", "backtest"])
        lines = (tmp / "out" / "resolved_config.txt").read_text().splitlines()
        assert "seed=5" in lines
        assert f"out.dir={tmp / 'out'}" in lines
        assert lines == sorted(lines)


class TestTuneAndReport:
    def tune_conf(self, workspace, extra=""):
        tmp, conf = workspace
        conf.write_text(
            conf.read_text()
            + "tune.model=additive\ntune.symbol=TEST\n"
            + "tune.param.n_changepoints=0|5|10\n"
            + "tune.param.lambda_delta=0.0|0.1|1.0|10.0\n"
            + extra
        )
        return tmp, conf

    def test_stepwise_trial_count(self, workspace, capsys):
        tmp, conf = self.tune_conf(workspace)
        out = tmp / "out"
        assert run(conf, out, "tune") == 0
        rows = (out / "tune_trials.csv").read_text().splitlines()
        assert len(rows) == 1 + 3 + 4
        assert rows[0] == "eval_index,n_changepoints,lambda_delta,objective"

    def test_grid_trial_count(self, workspace):
        tmp, conf = self.tune_conf(workspace)
        out = tmp / "out"
        assert run(conf, out, "tune", "--grid") == 0
        rows = (out / "tune_trials.csv").read_text().splitlines()
        assert len(rows) == 1 + 12

    def test_best_config_reruns_to_logged_value(self, workspace, capsys):
        tmp, conf = self.tune_conf(workspace)
        out = tmp / "out"
        run(conf, out, "tune")
        printed = capsys.readouterr().out
        best_value = float(printed.split("best mean RMSE ")[1].split()[0])
        best = load_config(out / "best_config.txt")
        spec = best.model_spec("additive")
        series = parse_csv((tmp / "data" / "TEST.csv").read_bytes(), "TEST")
        folds = rolling_splits(len(series), best.n_folds, best.test_len)
        result = run_backtest(spec, series, folds, seed=best.seed)
        reran = float(np.mean([rmse(r.predicted, r.actual) for r in result.runs]))
        assert abs(reran - best_value) < 5e-7  # printed value is rounded to 6 places

    def test_grid_budget_enforced(self, workspace):
        tmp, conf = self.tune_conf(workspace, extra="tune.max_evals=5\n")
        assert run(conf, tmp / "out", "tune", "--grid") == 2

    def test_tune_requires_model(self, workspace):
        tmp, conf = workspace
        conf.write_text(conf.read_text() + "tune.param.n_changepoints=0|5\n")
        assert run(conf, tmp / "out", "tune") == 2

    def test_tune_requires_space(self, workspace):
        tmp, conf = workspace
        conf.write_text(conf.read_text() + "tune.model=additive\n")
        assert run(conf, tmp / "out", "tune") == 2

    def test_report_prints_saved_grid(self, workspace, capsys):
        tmp, conf = workspace
        out = tmp / "out"
        run(conf, out, "backtest")
        capsys.readouterr()
        assert run(conf, out, "report") == 0
        printed = capsys.readouterr().out
        assert printed == (out / "report.csv").read_text()

    def test_report_without_backtest(self, workspace, capsys):
        tmp, conf = workspace
        assert run(conf, tmp / "out", "report") == 3
