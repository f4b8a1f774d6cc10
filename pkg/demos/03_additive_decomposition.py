"""Decompose a bundled series into trend + seasonality and band a forecast.

BANKC carries a 21-bar cycle on top of a slow drift, so the monthly
harmonics should soak up most of the structure.
"""

from pathlib import Path

import numpy as np

from stockcast.additive import (
    AdditiveConfig,
    SeasonalityConfig,
    fit,
    model_value,
    predict_with_interval,
)
from stockcast.market_data import parse_csv

ROOT = Path(__file__).resolve().parents[1]
series = parse_csv((ROOT / "data" / "BANKC.csv").read_bytes(), "BANKC")
close = series.column("close")

cfg = AdditiveConfig(
    n_changepoints=10,
    seasonalities=(
        SeasonalityConfig("weekly", 5.0, 3),
        SeasonalityConfig("monthly", 21.0, 3),
    ),
)
model = fit(close, cfg, origin="BANKC")

print(f"trend: rate {model.trend.k:+.5f} per bar, offset {model.trend.m:.2f}")
active = np.flatnonzero(model.trend.delta)
print(f"changepoints with a rate shift: {active.size} of {model.trend.delta.size}")
for season in model.seasonalities:
    amp = float(np.hypot(season.cos_coef[0], season.sin_coef[0]))
    print(f"{season.name}: period {season.period}, first-harmonic amplitude {amp:.3f}")
print(f"residual sigma {model.residual_sigma:.3f}")

fitted = model_value(model, np.arange(len(close), dtype=float))
print(f"in-sample RMSE {np.sqrt(np.mean((fitted - close) ** 2)):.3f}")

band = predict_with_interval(model, future_len=10, n_sims=2000, level=0.8, seed=1)
print("10-step forecast with an 80% band:")
for step in range(10):
    print(
        f"  step {step + 1}: {band.mean[step]:8.2f}  "
        f"[{band.lower[step]:8.2f}, {band.upper[step]:8.2f}]"
    )
