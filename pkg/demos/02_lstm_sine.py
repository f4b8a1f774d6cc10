"""Train the from-scratch LSTM on a clean sine wave and forecast five steps.

Everything is deterministic for a fixed seed, so rerunning this script
prints exactly the same numbers.
"""

import numpy as np

from stockcast.lstm import TrainConfig, predict_multistep, train
from stockcast.market_data import scale_minmax, split_sequences

T = 300
t = np.arange(T, dtype=float)
wave = np.sin(2 * np.pi * t / 40.0)

scaled, scale = scale_minmax(wave.reshape(-1, 1))
dataset = split_sequences(scaled, lookback=30, horizon=5, target_col=0)

cfg = TrainConfig(hidden=8, epochs=80, learning_rate=1e-2, seed=7, batch_size=32)
weights, history = train(dataset, cfg)

print(f"samples {len(dataset)}, hidden {cfg.hidden}, epochs {cfg.epochs}")
print(f"loss first epoch {history[0]:.6f} -> last epoch {history[-1]:.6f}")

forecast = predict_multistep(weights, scaled[-30:], scale, target_col=0)
truth = np.sin(2 * np.pi * np.arange(T, T + 5) / 40.0)
for step, (p, a) in enumerate(zip(forecast, truth), start=1):
    print(f"step {step}: predicted {p:+.4f}  true {a:+.4f}")
