"""Seasonal ARIMA via conditional sum of squares.

Estimation minimizes the sum of squared one-step residuals computed
recursively with zero pre-sample residuals (CSS), skipping the AR
warm-up.  The optimizer works in an unconstrained space mapped onto
stationary/invertible coefficients through the partial-autocorrelation
transform, so every iterate keeps the recursion finite.  Differencing
state records the values each pass consumed, which makes integration an
exact inverse and lets forecasts cumulate back to price levels.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from ._serde import LineReader, array_lines, fmt
from .errors import DataError, ModelError


@dataclass(frozen=True)
class SarimaOrder:
    """(a,b,c) trend and (A,B,C)m seasonal orders."""

    a: int
    b: int
    c: int
    A: int = 0
    B: int = 0
    C: int = 0
    m: int = 1

    def validate(self) -> None:
        for name in ("a", "b", "c", "A", "B", "C", "m"):
            if getattr(self, name) < 0:
                raise DataError(f"order {name} must be >= 0")
        if (self.A or self.B or self.C) and self.m < 1:
            raise DataError("season length m must be >= 1 with seasonal orders")
        if self.B > 3:
            raise DataError("seasonal differencing above order 3 is not supported")

    @property
    def ar_lag(self) -> int:
        return self.a + self.A * self.m

    @property
    def ma_lag(self) -> int:
        return self.c + self.C * self.m

    @property
    def has_intercept(self) -> bool:
        return self.b + self.B == 0

    @property
    def n_params(self) -> int:
        return self.a + self.c + self.A + self.C + (1 if self.has_intercept else 0)


@dataclass(frozen=True)
class DiffStage:
    """One differencing pass: the values it consumed and the tail it left."""

    kind: str  # "trend" or "seasonal"
    head: np.ndarray
    tail: np.ndarray


@dataclass(frozen=True)
class DifferenceState:
    stages: tuple[DiffStage, ...]
    season: int
    n_out: int


def difference(series, b: int, B: int, m: int = 1):
    """Apply (1-L)^b then (1-L^m)^B; returns the result and inversion state."""
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise DataError("series must be 1-D")
    if B and m < 1:
        raise DataError("season length m must be >= 1 for seasonal differencing")
    if x.shape[0] <= b + B * m:
        raise DataError(
            f"series of length {x.shape[0]} too short for differencing b={b}, "
            f"B={B}, m={m}"
        )
    stages: list[DiffStage] = []
    for _ in range(b):
        stages.append(DiffStage("trend", x[:1].copy(), x[-1:].copy()))
        x = np.diff(x)
    for _ in range(B):
        stages.append(DiffStage("seasonal", x[:m].copy(), x[-m:].copy()))
        x = x[m:] - x[:-m]
    return x, DifferenceState(tuple(stages), m, x.shape[0])


def integrate(diffed, state: DifferenceState) -> np.ndarray:
    """Exact inverse of difference for the same state."""
    x = np.asarray(diffed, dtype=float)
    if x.shape[0] != state.n_out:
        raise DataError(
            f"differenced length {x.shape[0]} does not match state ({state.n_out})"
        )
    for stage in reversed(state.stages):
        if stage.kind == "trend":
            x = np.concatenate([stage.head, stage.head[0] + np.cumsum(x)])
        else:
            m = state.season
            out = np.empty(x.shape[0] + m)
            out[:m] = stage.head
            for t in range(x.shape[0]):
                out[t + m] = out[t] + x[t]
            x = out
    return x


def integrate_forecast(future, state: DifferenceState) -> np.ndarray:
    """Cumulate differenced-space forecasts back to level scale.

    Each pass continues from the tail it recorded, so step h keeps the
    recursion y_t = y_{t-lag} + d_t running past the end of the sample.
    """
    x = np.asarray(future, dtype=float)
    for stage in reversed(state.stages):
        if stage.kind == "trend":
            x = stage.tail[0] + np.cumsum(x)
        else:
            m = state.season
            ext = np.concatenate([stage.tail, np.empty(x.shape[0])])
            for h in range(x.shape[0]):
                ext[m + h] = ext[h] + x[h]
            x = ext[m:]
    return x


def constrain_coeffs(raw) -> np.ndarray:
    """Unconstrained reals -> coefficients of a stable lag polynomial.

    tanh squashes each input into a partial autocorrelation, and the
    Durbin-Levinson recursion turns those into coefficients phi for which
    1 - sum(phi_i z^i) has every root outside the unit circle.
    """
    pac = np.tanh(np.asarray(raw, dtype=float))
    coeffs = np.zeros(0)
    for r in pac:
        coeffs = np.append(coeffs - r * coeffs[::-1], r)
    return coeffs


def unconstrain_coeffs(coeffs) -> np.ndarray:
    """Inverse of constrain_coeffs on the stable region."""
    work = np.asarray(coeffs, dtype=float).copy()
    pac_rev = []
    while work.shape[0]:
        r = work[-1]
        if not -1.0 < r < 1.0:
            raise DataError("coefficients outside the stable region")
        pac_rev.append(r)
        head = work[:-1]
        work = (head + r * head[::-1]) / (1.0 - r * r)
    return np.arctanh(np.array(pac_rev[::-1]))


@dataclass(frozen=True)
class SarimaParams:
    phi: np.ndarray
    theta: np.ndarray
    seasonal_phi: np.ndarray
    seasonal_theta: np.ndarray
    intercept: float = 0.0


def _lag_poly(coeffs: np.ndarray, m: int, sign: float) -> np.ndarray:
    """Ascending coefficients of 1 + sign * sum(c_j z^(j*m))."""
    poly = np.zeros(coeffs.shape[0] * m + 1)
    poly[0] = 1.0
    for j, cj in enumerate(coeffs, start=1):
        poly[j * m] = sign * cj
    return poly


def combined_polys(params: SarimaParams, order: SarimaOrder):
    """Multiply trend and seasonal polynomials into single AR/MA filters.

    Returns (ar_poly, ma_poly) in ascending powers with leading 1, for the
    recursion ma(L) e_t = ar(L) (w_t - mu).
    """
    ar = np.convolve(_lag_poly(params.phi, 1, -1.0), _lag_poly(params.seasonal_phi, order.m, -1.0))
    ma = np.convolve(_lag_poly(params.theta, 1, 1.0), _lag_poly(params.seasonal_theta, order.m, 1.0))
    return ar, ma


def css_residuals(params: SarimaParams, w, order: SarimaOrder) -> np.ndarray:
    """One-step residuals with zero pre-sample values.

    Entries before the AR warm-up (the largest AR lag) are exactly zero;
    later entries follow e_t = (w_t - mu) - sum(alpha_l (w_{t-l} - mu))
    - sum(beta_l e_{t-l}).
    """
    w = np.asarray(w, dtype=float)
    ar, ma = combined_polys(params, order)
    p = order.ar_lag
    if w.shape[0] <= p:
        raise DataError(f"need more than {p} differenced observations")
    centered = w - params.intercept
    z = lfilter(ar, [1.0], centered)
    z[:p] = 0.0
    e = lfilter([1.0], ma, z)
    if not np.all(np.isfinite(e)):
        raise ModelError("residual recursion diverged: parameters outside the stable region")
    return e


def css_loss(params: SarimaParams, w, order: SarimaOrder) -> float:
    """Conditional sum of squares beyond the AR warm-up."""
    e = css_residuals(params, w, order)
    tail = e[order.ar_lag :]
    return float(tail @ tail)


def _unpack(x: np.ndarray, order: SarimaOrder) -> SarimaParams:
    i = 0
    phi = constrain_coeffs(x[i : i + order.a]); i += order.a
    theta = -constrain_coeffs(x[i : i + order.c]); i += order.c
    sphi = constrain_coeffs(x[i : i + order.A]); i += order.A
    stheta = -constrain_coeffs(x[i : i + order.C]); i += order.C
    intercept = float(x[i]) if order.has_intercept else 0.0
    return SarimaParams(phi, theta, sphi, stheta, intercept)


@dataclass(frozen=True)
class SarimaConfig:
    max_iter: int = 5000
    restarts: int = 3
    seed: int = 0


def _min_root_magnitude(ascending: np.ndarray) -> float:
    """Smallest |root| of a lag polynomial given in ascending powers.

    Leading coefficients far below the polynomial's scale are dropped
    first: each contributes one root far outside the unit circle but makes
    the companion eigenvalue solve wildly ill-conditioned.
    """
    desc = ascending[::-1]
    scale = np.max(np.abs(desc))
    k = 0
    while k < desc.shape[0] - 1 and abs(desc[k]) <= 1e-12 * scale:
        k += 1
    roots = np.roots(desc[k:])
    return float(np.min(np.abs(roots))) if roots.size else np.inf


@dataclass(frozen=True)
class SarimaModel:
    """Fitted coefficients plus the tails needed to roll forecasts forward."""

    order: SarimaOrder
    params: SarimaParams
    sigma2: float
    diff_state: DifferenceState
    w_tail: np.ndarray
    e_tail: np.ndarray

    def validate(self) -> None:
        self.order.validate()
        if self.sigma2 < 0 or not np.isfinite(self.sigma2):
            raise DataError("innovation variance must be finite and >= 0")
        ar, ma = combined_polys(self.params, self.order)
        for name, poly in (("AR", ar), ("MA", ma)):
            if poly.shape[0] > 1 and _min_root_magnitude(poly) <= 1.0 - 1e-9:
                raise ModelError(f"{name} polynomial root inside the unit circle")
        if self.w_tail.shape[0] != self.order.ar_lag:
            raise DataError("stored series tail does not match the AR lag")
        if self.e_tail.shape[0] != self.order.ma_lag:
            raise DataError("stored residual tail does not match the MA lag")


def fit(series, order: SarimaOrder, config: SarimaConfig = SarimaConfig()) -> SarimaModel:
    """Estimate by CSS with a simplex search and seeded jitter restarts."""
    order.validate()
    y = np.asarray(series, dtype=float)
    if not np.all(np.isfinite(y)):
        raise DataError("series contains non-finite values")
    consumed = order.b + order.B * order.m
    if consumed > 0.2 * y.shape[0]:
        warnings.warn(
            f"differencing consumes {consumed} of {y.shape[0]} observations",
            stacklevel=2,
        )
    w, state = difference(y, order.b, order.B, order.m)
    n_used = w.shape[0] - order.ar_lag
    if n_used < max(order.n_params + 2, 5):
        raise DataError(
            f"{w.shape[0]} differenced observations are too few for "
            f"{order.n_params} parameters with warm-up {order.ar_lag}"
        )

    def objective(x):
        try:
            return css_loss(_unpack(x, order), w, order)
        except ModelError:
            return 1e300

    n_free = order.n_params
    if n_free == 0:
        best_x = np.zeros(0)
    else:
        start = np.zeros(n_free)
        if order.has_intercept:
            start[-1] = float(w.mean())
        rng = np.random.default_rng(config.seed)
        starts = [start] + [
            start + rng.normal(0.0, 0.1, size=n_free) for _ in range(config.restarts)
        ]
        best_x, best_val, any_converged = None, np.inf, False
        for x0 in starts:
            res = minimize(
                objective, x0, method="Nelder-Mead",
                options={"maxiter": config.max_iter, "xatol": 1e-8, "fatol": 1e-10},
            )
            any_converged = any_converged or bool(res.success)
            if res.fun < best_val:
                best_val, best_x = res.fun, res.x
        if not any_converged:
            spread = abs(float(best_val))
            raise ModelError(
                f"optimizer failed to converge within {config.max_iter} iterations "
                f"(best objective {spread:.6g})"
            )

    params = _unpack(best_x, order)
    e = css_residuals(params, w, order)
    loss = float(e[order.ar_lag :] @ e[order.ar_lag :])
    model = SarimaModel(
        order=order,
        params=params,
        sigma2=loss / n_used,
        diff_state=state,
        w_tail=w[w.shape[0] - order.ar_lag :].copy(),
        e_tail=e[e.shape[0] - order.ma_lag :].copy() if order.ma_lag else np.zeros(0),
    )
    model.validate()
    return model


def forecast_differenced(model: SarimaModel, steps: int) -> np.ndarray:
    """Iterate the difference equation with future residuals set to zero."""
    if steps < 1:
        raise DataError("forecast steps must be >= 1")
    model.validate()
    ar, ma = combined_polys(model.params, model.order)
    alpha = -ar[1:]
    beta = ma[1:]
    mu = model.params.intercept
    w_hist = list(model.w_tail - mu)
    e_hist = list(model.e_tail)
    out = np.empty(steps)
    for h in range(steps):
        val = 0.0
        for l, al in enumerate(alpha, start=1):
            if al != 0.0:
                val += al * w_hist[-l]
        for l, bl in enumerate(beta, start=1):
            if bl != 0.0:
                val += bl * e_hist[-l]
        w_hist.append(val)
        e_hist.append(0.0)
        out[h] = val + mu
    return out


def forecast(model: SarimaModel, steps: int) -> np.ndarray:
    """Level-scale multistep forecast (differenced forecast, integrated)."""
    return integrate_forecast(forecast_differenced(model, steps), model.diff_state)


FORMAT_TAG = "stockcast-sarima"
FORMAT_VERSION = 1


def save_sarima(model: SarimaModel, path: str | Path) -> None:
    o = model.order
    lines = [
        f"{FORMAT_TAG} {FORMAT_VERSION}",
        f"order {o.a} {o.b} {o.c} {o.A} {o.B} {o.C} {o.m}",
        f"intercept {fmt(model.params.intercept)}",
        f"sigma2 {fmt(model.sigma2)}",
    ]
    lines.extend(array_lines("phi", model.params.phi))
    lines.extend(array_lines("theta", model.params.theta))
    lines.extend(array_lines("seasonal_phi", model.params.seasonal_phi))
    lines.extend(array_lines("seasonal_theta", model.params.seasonal_theta))
    lines.append(f"stages {len(model.diff_state.stages)} {model.diff_state.season} "
                 f"{model.diff_state.n_out}")
    for stage in model.diff_state.stages:
        lines.append(f"stage {stage.kind}")
        lines.extend(array_lines("head", stage.head))
        lines.extend(array_lines("tail", stage.tail))
    lines.extend(array_lines("w_tail", model.w_tail))
    lines.extend(array_lines("e_tail", model.e_tail))
    Path(path).write_text("\n".join(lines) + "\n")


def load_sarima(path: str | Path) -> SarimaModel:
    reader = LineReader(Path(path).read_text())
    tag = reader.expect(FORMAT_TAG)
    if int(tag[0]) != FORMAT_VERSION:
        raise DataError(f"unsupported model version {tag[0]}")
    order = SarimaOrder(*(int(v) for v in reader.expect("order")))
    intercept = reader.scalar("intercept")
    sigma2 = reader.scalar("sigma2")
    params = SarimaParams(
        phi=reader.array("phi"),
        theta=reader.array("theta"),
        seasonal_phi=reader.array("seasonal_phi"),
        seasonal_theta=reader.array("seasonal_theta"),
        intercept=intercept,
    )
    n_stages, season, n_out = (int(v) for v in reader.expect("stages"))
    stages = []
    for _ in range(n_stages):
        kind = reader.expect("stage")[0]
        stages.append(DiffStage(kind, reader.array("head"), reader.array("tail")))
    model = SarimaModel(
        order=order,
        params=params,
        sigma2=sigma2,
        diff_state=DifferenceState(tuple(stages), season, n_out),
        w_tail=reader.array("w_tail"),
        e_tail=reader.array("e_tail"),
    )
    model.validate()
    return model
