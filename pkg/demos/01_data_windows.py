"""Load a bundled OHLCV file and turn it into supervised training windows."""

from pathlib import Path

from stockcast.market_data import (
    parse_csv,
    rolling_splits,
    scale_minmax,
    split_sequences,
)

ROOT = Path(__file__).resolve().parents[1]

series = parse_csv((ROOT / "data" / "BANKA.csv").read_bytes(), "BANKA")
print(f"{series.symbol}: {len(series)} bars, {series.dates[0]} .. {series.dates[-1]}")

close = series.column("close")
print(f"close range {close.min():.2f} .. {close.max():.2f}")

# five input channels, close last so it doubles as the forecast target
matrix = series.feature_matrix(["open", "high", "low", "volume", "close"])
scaled, scale = scale_minmax(matrix)
print(f"feature matrix {matrix.shape}, scaled to [0, 1] per column")

dataset = split_sequences(scaled, lookback=30, horizon=5, target_col=4)
print(
    f"windows: {len(dataset)} samples, inputs {dataset.inputs.shape}, "
    f"targets {dataset.targets.shape}"
)

folds = rolling_splits(len(series), n_folds=5, test_len=5)
for k, ((a, b), (c, d)) in enumerate(folds, start=1):
    print(f"fold {k}: train [{a}, {b})  test [{c}, {d})")
