"""Fit a seasonal ARIMA by conditional sum of squares and roll a forecast."""

from pathlib import Path

import numpy as np

from stockcast.market_data import parse_csv
from stockcast.sarima import (
    SarimaOrder,
    combined_polys,
    difference,
    fit,
    forecast,
    integrate,
)

ROOT = Path(__file__).resolve().parents[1]
series = parse_csv((ROOT / "data" / "BANKB.csv").read_bytes(), "BANKB")
close = series.column("close")

# differencing is exactly invertible; integrate() restores the series
diffed, state = difference(close, b=1, B=1, m=5)
print(f"difference (1)(1)_5: {len(close)} -> {diffed.shape[0]} observations")
print(f"round-trip error {np.max(np.abs(integrate(diffed, state) - close)):.2e}")

order = SarimaOrder(1, 1, 1, 1, 0, 1, 5)
model = fit(close, order)
print(f"order (1,1,1)(1,0,1)_5 fitted, innovation variance {model.sigma2:.4f}")
print(f"phi {model.params.phi}, theta {model.params.theta}")
print(f"seasonal phi {model.params.seasonal_phi}, seasonal theta {model.params.seasonal_theta}")

for tag, poly in zip(("AR", "MA"), combined_polys(model.params, model.order)):
    if poly.shape[0] > 1:
        roots = np.roots(poly[::-1])
        print(f"{tag} smallest root magnitude {np.min(np.abs(roots)):.3f} (must exceed 1)")

steps = forecast(model, 5)
print("5-step forecast:", np.round(steps, 2))
print("last close:    ", round(float(close[-1]), 2))
