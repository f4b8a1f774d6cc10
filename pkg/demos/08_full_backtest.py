"""Rolling-origin backtest of all four model families over bundled symbols.

Prints the model-by-symbol RMSE grid the `stockcast backtest` command
writes to report.csv; settings are trimmed so the demo finishes fast.
"""

from pathlib import Path

from stockcast.evaluation import ModelSpec, build_report, report_csv, run_backtest
from stockcast.market_data import parse_csv, rolling_splits

ROOT = Path(__file__).resolve().parents[1]
SYMBOLS = ("BANKA", "BANKB", "BANKC", "BANKD")

specs = [
    ModelSpec("persistence", "persistence"),
    ModelSpec("lstm", "lstm", {"lookback": 16, "hidden": 8, "epochs": 6,
                               "learning_rate": 0.01}),
    ModelSpec("additive", "additive", {"n_changepoints": 8}),
    ModelSpec("sarima", "sarima", {"order": (1, 1, 1)}),
]

runs_by_symbol = {}
for symbol in SYMBOLS:
    series = parse_csv((ROOT / "data" / f"{symbol}.csv").read_bytes(), symbol)
    folds = rolling_splits(len(series), n_folds=3, test_len=5)
    runs = []
    for spec in specs:
        result = run_backtest(spec, series, folds, seed=0)
        for fold, message in result.failures:
            print(f"warning {symbol}/{spec.name} fold {fold}: {message}")
        runs.extend(result.runs)
    runs_by_symbol[symbol] = runs
    print(f"{symbol}: {len(runs)} forecast runs")

report = build_report(runs_by_symbol, metadata={"folds": 3, "test_len": 5})
print()
print(report_csv(report), end="")
print()
best = {
    symbol: min(report.models, key=lambda m: report.averages[(m, symbol)])
    for symbol in report.symbols
}
for symbol, model in best.items():
    print(f"best on {symbol}: {model} "
          f"(RMSE {report.averages[(model, symbol)]:.3f})")
