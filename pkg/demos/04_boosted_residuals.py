"""Correct additive-model residuals with boosted trees, then compare RMSE.

Part one drives fit_booster directly on a synthetic regression to show
the staged loss dropping; part two runs the full hybrid against the plain
additive model on a bundled symbol.
"""

from pathlib import Path

import numpy as np

from stockcast.boosting import BoostConfig, fit_booster
from stockcast.evaluation import ModelSpec, rmse, run_backtest
from stockcast.market_data import parse_csv, rolling_splits

rng = np.random.default_rng(5)
X = rng.uniform(-2.0, 2.0, size=(300, 3))
y = np.sin(X[:, 0]) + 0.5 * X[:, 1] ** 2 + rng.normal(0.0, 0.2, size=300)

cfg = BoostConfig(n_trees=40, max_leaves=8, learning_rate=0.2, min_samples_leaf=5)
ens = fit_booster(X, y, cfg)

pred = np.full(300, ens.base_score)
print("boosting rounds (every 10th):")
for k, tree in enumerate(ens.trees, start=1):
    pred += ens.learning_rate * tree.predict(X)
    if k % 10 == 0:
        print(f"  round {k}: train MSE {np.mean((y - pred) ** 2):.4f}")

ROOT = Path(__file__).resolve().parents[1]
series = parse_csv((ROOT / "data" / "BANKA.csv").read_bytes(), "BANKA")
folds = rolling_splits(len(series), n_folds=3, test_len=5)

plain = ModelSpec("additive", "additive", {"n_changepoints": 10})
hybrid = ModelSpec(
    "additive+trees",
    "additive",
    {"n_changepoints": 10, "boosted": True, "lags": (1, 2, 3, 5), "n_trees": 60},
)

for spec in (plain, hybrid):
    result = run_backtest(spec, series, folds, seed=0)
    scores = [rmse(r.predicted, r.actual) for r in result.runs]
    print(f"{spec.name}: fold RMSE {[round(s, 3) for s in scores]}, "
          f"mean {np.mean(scores):.3f}")
