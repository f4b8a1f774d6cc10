"""Stepwise versus grid hyperparameter search on a real backtest objective.

Stepwise freezes one parameter at a time, so it evaluates the sum of the
candidate counts instead of their product: here 7 trials against 12.
"""

from pathlib import Path

import numpy as np

from stockcast.evaluation import ModelSpec, rmse, run_backtest
from stockcast.market_data import parse_csv, rolling_splits
from stockcast.tuning import SearchParam, SearchSpace, grid_optimize, stepwise_optimize

ROOT = Path(__file__).resolve().parents[1]
series = parse_csv((ROOT / "data" / "BANKA.csv").read_bytes(), "BANKA")
series = series.slice(len(series) - 200, len(series))
folds = rolling_splits(len(series), n_folds=2, test_len=5)


def objective(params):
    spec = ModelSpec("candidate", "additive", dict(params))
    result = run_backtest(spec, series, folds, seed=0)
    if not result.runs:
        return float("nan")
    return float(np.mean([rmse(r.predicted, r.actual) for r in result.runs]))


space = SearchSpace(
    (
        SearchParam("n_changepoints", (0, 5, 10), default=5),
        SearchParam("lambda_delta", (0.0, 0.1, 1.0, 10.0), default=0.0),
    )
)
print(f"search space: stepwise {space.stepwise_count()} evals, "
      f"grid {space.grid_count()} evals")

for label, log in (
    ("stepwise", stepwise_optimize(objective, space)),
    ("grid", grid_optimize(objective, space)),
):
    print(f"{label}: {len(log.trials)} trials, best {log.best_config} "
          f"-> RMSE {log.best_value:.4f}")
