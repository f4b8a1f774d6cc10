"""From-scratch LSTM with multistep output head, trained by BPTT + Adam.

One recurrent layer: forget/input/candidate/output gates over the
concatenated [previous hidden, current input] vector, followed by an
affine head mapping the final hidden state to all H forecast steps at
once (direct multistep, no recursive feeding).  Univariate and
multivariate inputs share the same code path; only the feature count
differs.  All math is double precision so finite-difference checks stay
tight.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.special import expit

from ._serde import LineReader, array_lines, fmt
from .errors import DataError, ModelError
from .market_data import ScaleParams, WindowedDataset, inverse_scale_column

WEIGHT_FIELDS = ("w_f", "w_i", "w_c", "w_o", "b_f", "b_i", "b_c", "b_o", "head_w", "head_b")


@dataclass(frozen=True)
class LstmWeights:
    """All trainable parameters; gate matrices act on [h, x] concatenations."""

    w_f: np.ndarray
    w_i: np.ndarray
    w_c: np.ndarray
    w_o: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray
    head_w: np.ndarray
    head_b: np.ndarray

    @property
    def hidden_size(self) -> int:
        return self.w_f.shape[0]

    @property
    def input_size(self) -> int:
        return self.w_f.shape[1] - self.w_f.shape[0]

    @property
    def horizon(self) -> int:
        return self.head_w.shape[0]

    def named_arrays(self):
        return [(name, getattr(self, name)) for name in WEIGHT_FIELDS]

    def map_arrays(self, fn) -> "LstmWeights":
        return LstmWeights(**{name: fn(arr) for name, arr in self.named_arrays()})

    def validate(self) -> None:
        hid = self.hidden_size
        combined = self.w_f.shape[1]
        for name in ("w_f", "w_i", "w_c", "w_o"):
            if getattr(self, name).shape != (hid, combined):
                raise DataError(f"{name}: inconsistent gate matrix shape")
        for name in ("b_f", "b_i", "b_c", "b_o"):
            if getattr(self, name).shape != (hid,):
                raise DataError(f"{name}: inconsistent bias shape")
        if self.head_w.shape[1] != hid or self.head_b.shape != (self.horizon,):
            raise DataError("output head shape inconsistent with hidden size")
        for name, arr in self.named_arrays():
            if not np.all(np.isfinite(arr)):
                raise DataError(f"{name}: non-finite entries")


@dataclass(frozen=True)
class LstmState:
    """Hidden and cell vectors carried between time steps."""

    h: np.ndarray
    c: np.ndarray


@dataclass(frozen=True)
class GateCache:
    """Per-step activations retained for backpropagation through time."""

    z: np.ndarray
    f: np.ndarray
    i: np.ndarray
    g: np.ndarray
    c_prev: np.ndarray
    c: np.ndarray
    o: np.ndarray


def zero_state(hidden: int, batch: int | None = None) -> LstmState:
    shape = (hidden,) if batch is None else (batch, hidden)
    return LstmState(h=np.zeros(shape), c=np.zeros(shape))


def lstm_cell_forward(x_t: np.ndarray, state: LstmState, w: LstmWeights):
    """One gated cell update; works on (F,) vectors or (B, F) batches.

    Returns the new state plus the gate record needed by BPTT.
    """
    x_t = np.asarray(x_t, dtype=float)
    if x_t.shape[-1] != w.input_size:
        raise DataError(
            f"input width {x_t.shape[-1]} does not match weights ({w.input_size})"
        )
    z = np.concatenate([state.h, x_t], axis=-1)
    f = expit(z @ w.w_f.T + w.b_f)
    i = expit(z @ w.w_i.T + w.b_i)
    g = np.tanh(z @ w.w_c.T + w.b_c)
    c = f * state.c + i * g
    o = expit(z @ w.w_o.T + w.b_o)
    h = o * np.tanh(c)
    cache = GateCache(z=z, f=f, i=i, g=g, c_prev=state.c, c=c, o=o)
    return LstmState(h=h, c=c), cache


def forward_sequence(window: np.ndarray, w: LstmWeights) -> np.ndarray:
    """Run one L-step window from a zero state and apply the multistep head."""
    window = np.asarray(window, dtype=float)
    if window.ndim != 2:
        raise DataError("window must be a 2-D (L, F) matrix")
    state = zero_state(w.hidden_size)
    for t in range(window.shape[0]):
        state, _ = lstm_cell_forward(window[t], state, w)
    return state.h @ w.head_w.T + w.head_b


def _forward_batch(inputs: np.ndarray, w: LstmWeights):
    """Batched unroll over (B, L, F) inputs, keeping caches for backprop."""
    B, L, _ = inputs.shape
    state = zero_state(w.hidden_size, batch=B)
    caches = []
    for t in range(L):
        state, cache = lstm_cell_forward(inputs[:, t, :], state, w)
        caches.append(cache)
    preds = state.h @ w.head_w.T + w.head_b
    return preds, caches


def bptt_gradients(batch: WindowedDataset, w: LstmWeights):
    """Mean-squared-error loss and its exact gradients over one batch.

    The loss averages squared errors over every sample and every horizon
    step; gradients are accumulated by unrolling the cell backwards.
    """
    if len(batch) == 0:
        raise DataError("empty batch")
    inputs, targets = batch.inputs, batch.targets
    B, _, _ = inputs.shape
    H = targets.shape[1]
    hid = w.hidden_size

    preds, caches = _forward_batch(inputs, w)
    err = preds - targets
    loss = float(np.mean(err**2))

    d_pred = 2.0 * err / (B * H)
    h_last = caches[-1].o * np.tanh(caches[-1].c)
    grads = {name: np.zeros_like(arr) for name, arr in w.named_arrays()}
    grads["head_w"] = d_pred.T @ h_last
    grads["head_b"] = d_pred.sum(axis=0)

    d_h = d_pred @ w.head_w
    d_c = np.zeros((B, hid))
    for cache in reversed(caches):
        tanh_c = np.tanh(cache.c)
        d_o = d_h * tanh_c
        d_c = d_c + d_h * cache.o * (1.0 - tanh_c**2)
        d_f = d_c * cache.c_prev
        d_i = d_c * cache.g
        d_g = d_c * cache.i
        pre_f = d_f * cache.f * (1.0 - cache.f)
        pre_i = d_i * cache.i * (1.0 - cache.i)
        pre_g = d_g * (1.0 - cache.g**2)
        pre_o = d_o * cache.o * (1.0 - cache.o)
        grads["w_f"] += pre_f.T @ cache.z
        grads["w_i"] += pre_i.T @ cache.z
        grads["w_c"] += pre_g.T @ cache.z
        grads["w_o"] += pre_o.T @ cache.z
        grads["b_f"] += pre_f.sum(axis=0)
        grads["b_i"] += pre_i.sum(axis=0)
        grads["b_c"] += pre_g.sum(axis=0)
        grads["b_o"] += pre_o.sum(axis=0)
        d_z = pre_f @ w.w_f + pre_i @ w.w_i + pre_g @ w.w_c + pre_o @ w.w_o
        d_h = d_z[:, :hid]
        d_c = d_c * cache.f
    if not np.isfinite(loss):
        raise ModelError("non-finite loss: training diverged")
    return loss, LstmWeights(**grads)


def clip_gradients(grads: LstmWeights, max_norm: float) -> LstmWeights:
    """Rescale to the given global norm when exceeded; direction unchanged."""
    total = np.sqrt(sum(float(np.sum(a**2)) for _, a in grads.named_arrays()))
    if max_norm <= 0 or total <= max_norm:
        return grads
    factor = max_norm / total
    return grads.map_arrays(lambda a: a * factor)


@dataclass(frozen=True)
class AdamState:
    """First/second moment accumulators plus the shared step counter."""

    m: LstmWeights
    v: LstmWeights
    t: int
    alpha: float
    beta1: float
    beta2: float
    eps: float


def init_adam(
    w: LstmWeights,
    alpha: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    zeros = w.map_arrays(np.zeros_like)
    return AdamState(m=zeros, v=zeros, t=0, alpha=alpha, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(w: LstmWeights, grads: LstmWeights, opt: AdamState):
    """One bias-corrected Adam update; returns new weights and state."""
    for name, g in grads.named_arrays():
        if not np.all(np.isfinite(g)):
            raise ModelError(f"non-finite gradient in {name}")
    t = opt.t + 1
    new_w, new_m, new_v = {}, {}, {}
    for name, g in grads.named_arrays():
        m = opt.beta1 * getattr(opt.m, name) + (1.0 - opt.beta1) * g
        v = opt.beta2 * getattr(opt.v, name) + (1.0 - opt.beta2) * g**2
        m_hat = m / (1.0 - opt.beta1**t)
        v_hat = v / (1.0 - opt.beta2**t)
        new_w[name] = getattr(w, name) - opt.alpha * m_hat / (np.sqrt(v_hat) + opt.eps)
        new_m[name] = m
        new_v[name] = v
    return (
        LstmWeights(**new_w),
        replace(opt, m=LstmWeights(**new_m), v=LstmWeights(**new_v), t=t),
    )


@dataclass(frozen=True)
class TrainConfig:
    """Training knobs; the loss is always mean squared error."""

    hidden: int = 64
    epochs: int = 100
    learning_rate: float = 1e-3
    seed: int = 0
    clip_norm: float = 5.0
    batch_size: int = 32

    def validate(self) -> None:
        if self.hidden < 1 or self.epochs < 1 or self.batch_size < 1:
            raise DataError("hidden, epochs and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise DataError("learning rate must be positive")


def init_weights(
    hidden: int, input_size: int, horizon: int, rng: np.random.Generator
) -> LstmWeights:
    """Xavier-uniform matrices, zero biases, forget-gate bias offset +1."""
    combined = hidden + input_size
    limit = np.sqrt(6.0 / (combined + hidden))

    def gate():
        return rng.uniform(-limit, limit, size=(hidden, combined))

    head_limit = np.sqrt(6.0 / (hidden + horizon))
    return LstmWeights(
        w_f=gate(),
        w_i=gate(),
        w_c=gate(),
        w_o=gate(),
        b_f=np.ones(hidden),
        b_i=np.zeros(hidden),
        b_c=np.zeros(hidden),
        b_o=np.zeros(hidden),
        head_w=rng.uniform(-head_limit, head_limit, size=(horizon, hidden)),
        head_b=np.zeros(horizon),
    )


def train(dataset: WindowedDataset, cfg: TrainConfig):
    """Minibatch Adam training, deterministic for a given seed.

    Returns the final-epoch weights and the per-epoch loss history (mean
    of the pre-update batch losses within each epoch).
    """
    cfg.validate()
    if len(dataset) == 0:
        raise DataError("empty dataset")
    rng = np.random.default_rng(cfg.seed)
    w = init_weights(cfg.hidden, dataset.n_features, dataset.horizon, rng)
    opt = init_adam(w, alpha=cfg.learning_rate)
    history: list[float] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(dataset))
        batch_losses = []
        for start in range(0, len(dataset), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            try:
                loss, grads = bptt_gradients(dataset.subset(idx), w)
            except ModelError as exc:
                raise ModelError(f"epoch {epoch}: {exc}") from None
            grads = clip_gradients(grads, cfg.clip_norm)
            w, opt = adam_step(w, grads, opt)
            batch_losses.append(loss)
        history.append(float(np.mean(batch_losses)))
    return w, history


def predict_multistep(
    w: LstmWeights,
    recent_window: np.ndarray,
    scale: ScaleParams,
    target_col: int,
) -> np.ndarray:
    """Forecast H steps from the latest scaled window, in price units."""
    recent_window = np.asarray(recent_window, dtype=float)
    if recent_window.ndim != 2 or recent_window.shape[1] != w.input_size:
        raise DataError(
            f"window shape {recent_window.shape} does not match input size {w.input_size}"
        )
    scaled = forward_sequence(recent_window, w)
    return inverse_scale_column(scaled, scale, target_col)


@dataclass(frozen=True)
class TrainedLstm:
    """Weights plus the preprocessing needed to forecast raw price series."""

    weights: LstmWeights
    scale: ScaleParams
    feature_names: tuple[str, ...]
    target_col: int
    config: TrainConfig


FORMAT_TAG = "stockcast-lstm"
FORMAT_VERSION = 1


def save_lstm(model: TrainedLstm, path: str | Path) -> None:
    """Write the versioned text layout; load_lstm round-trips bit-exactly."""
    w = model.weights
    lines = [
        f"{FORMAT_TAG} {FORMAT_VERSION}",
        f"hidden {w.hidden_size}",
        f"input {w.input_size}",
        f"horizon {w.horizon}",
        f"features {' '.join(model.feature_names)}",
        f"target_col {model.target_col}",
        "config "
        + " ".join(
            [
                str(model.config.hidden),
                str(model.config.epochs),
                fmt(model.config.learning_rate),
                str(model.config.seed),
                fmt(model.config.clip_norm),
                str(model.config.batch_size),
            ]
        ),
    ]
    for name, arr in w.named_arrays():
        lines.extend(array_lines(name, arr))
    lines.extend(array_lines("scale_min", model.scale.minimum))
    lines.extend(array_lines("scale_max", model.scale.maximum))
    Path(path).write_text("\n".join(lines) + "\n")


def load_lstm(path: str | Path) -> TrainedLstm:
    reader = LineReader(Path(path).read_text())
    tag = reader.expect(FORMAT_TAG)
    if int(tag[0]) != FORMAT_VERSION:
        raise DataError(f"unsupported model version {tag[0]}")
    reader.integer("hidden")
    reader.integer("input")
    reader.integer("horizon")
    features = tuple(reader.expect("features"))
    target_col = reader.integer("target_col")
    cfg_parts = reader.expect("config")
    config = TrainConfig(
        hidden=int(cfg_parts[0]),
        epochs=int(cfg_parts[1]),
        learning_rate=float(cfg_parts[2]),
        seed=int(cfg_parts[3]),
        clip_norm=float(cfg_parts[4]),
        batch_size=int(cfg_parts[5]),
    )
    arrays = {name: reader.array(name) for name in WEIGHT_FIELDS}
    weights = LstmWeights(**arrays)
    weights.validate()
    scale = ScaleParams(minimum=reader.array("scale_min"), maximum=reader.array("scale_max"))
    return TrainedLstm(
        weights=weights,
        scale=scale,
        feature_names=features,
        target_col=target_col,
        config=config,
    )
