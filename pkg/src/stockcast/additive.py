"""Decomposable additive forecaster: trend + seasonality + events + noise.

The model is y(t) = g(t) + s(t) + h(t) + eps.  g is piecewise-linear or
logistic with changepoints, s is a sum of Fourier blocks, h collects
holiday indicators and exogenous regressors (e.g. news sentiment), and
eps is Gaussian with the in-sample residual spread.  Time t is the bar
index of the series (0-based); the origin date is carried on the model
so indices stay unambiguous.

Fitting is penalized least squares.  With no changepoint penalty the
problem is linear and solved directly; with an L1 penalty on the rate
adjustments it runs coordinate descent with soft thresholding on those
coordinates only.  Uncertainty comes from simulating future paths that
sprinkle new changepoints at the historical frequency.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from ._serde import LineReader, array_lines, fmt
from .errors import DataError, ModelError


@dataclass(frozen=True)
class TrendSpec:
    """Growth curve: base rate k, offset m, changepoint rate adjustments.

    For the linear kind the offset adjustments are tied as
    gamma_j = -s_j * delta_j so the curve stays continuous; the logistic
    kind uses the matching recursive tie.
    """

    kind: str
    k: float
    m: float
    changepoints: np.ndarray
    delta: np.ndarray
    gamma: np.ndarray
    capacity: float | None = None

    def validate(self) -> None:
        if self.kind not in ("linear", "logistic"):
            raise DataError(f"unknown trend kind {self.kind!r}")
        J = self.changepoints.shape[0]
        if self.delta.shape != (J,) or self.gamma.shape != (J,):
            raise DataError("changepoints, delta and gamma lengths differ")
        if J and np.any(np.diff(self.changepoints) <= 0):
            raise DataError("changepoints must be strictly increasing")
        if self.kind == "logistic" and (self.capacity is None or self.capacity <= 0):
            raise DataError("logistic trend needs capacity > 0")
        for name in ("k", "m"):
            if not np.isfinite(getattr(self, name)):
                raise DataError(f"trend {name} is not finite")
        if J and not (np.all(np.isfinite(self.delta)) and np.all(np.isfinite(self.gamma))):
            raise DataError("trend adjustments contain non-finite values")


@dataclass(frozen=True)
class SeasonalitySpec:
    """One Fourier block: sum_k a_k cos(2 pi k t / P) + b_k sin(2 pi k t / P)."""

    period: float
    cos_coef: np.ndarray
    sin_coef: np.ndarray
    name: str = ""

    @property
    def n_terms(self) -> int:
        return self.cos_coef.shape[0]

    def validate(self) -> None:
        if self.period <= 0:
            raise DataError("seasonality period must be positive")
        if self.n_terms < 1 or self.sin_coef.shape != self.cos_coef.shape:
            raise DataError("need n >= 1 matching cos/sin coefficient pairs")
        if not (np.all(np.isfinite(self.cos_coef)) and np.all(np.isfinite(self.sin_coef))):
            raise DataError("seasonality coefficients must be finite")


@dataclass(frozen=True)
class HolidaySpec:
    """Named 0/1 event effects; each event lists the bar indices it covers."""

    names: tuple[str, ...]
    effects: np.ndarray
    times: tuple[np.ndarray, ...]

    @property
    def n_events(self) -> int:
        return len(self.names)

    def validate(self) -> None:
        if not (len(self.names) == self.effects.shape[0] == len(self.times)):
            raise DataError("holiday names, effects and time lists differ in length")
        for name in self.names:
            if not name or any(ch.isspace() for ch in name):
                raise DataError(f"holiday name {name!r} must be non-empty without spaces")
        if self.n_events and not np.all(np.isfinite(self.effects)):
            raise DataError("holiday effects must be finite")


def no_holidays() -> HolidaySpec:
    return HolidaySpec(names=(), effects=np.zeros(0), times=())


@dataclass(frozen=True)
class AdditiveModel:
    """Fitted decomposition plus the residual spread used for intervals."""

    trend: TrendSpec
    seasonalities: tuple[SeasonalitySpec, ...]
    holidays: HolidaySpec
    exog_names: tuple[str, ...]
    exog_coef: np.ndarray
    residual_sigma: float
    n_obs: int
    origin: str = ""
    unit: str = "bar"

    def validate(self) -> None:
        self.trend.validate()
        for spec in self.seasonalities:
            spec.validate()
        self.holidays.validate()
        if len(self.exog_names) != self.exog_coef.shape[0]:
            raise DataError("exogenous names and coefficients differ in length")
        if self.residual_sigma < 0 or not np.isfinite(self.residual_sigma):
            raise DataError("residual sigma must be finite and >= 0")
        if self.n_obs < 1:
            raise DataError("model must cover at least one observation")


def eval_trend(t, spec: TrendSpec):
    """Growth value at time t (scalar or array).

    Linear: (k + a(t)@delta) * t + (m + a(t)@gamma) where a(t)_j = 1 for
    t >= s_j.  Logistic: capacity * sigmoid(rate(t) * (t - offset(t)))
    with the same indicator-adjusted rate and offset.
    """
    t_arr = np.asarray(t, dtype=float)
    if spec.changepoints.shape[0]:
        active = t_arr[..., None] >= spec.changepoints
        rate = spec.k + active @ spec.delta
        offset = spec.m + active @ spec.gamma
    else:
        rate = spec.k + np.zeros_like(t_arr)
        offset = spec.m + np.zeros_like(t_arr)
    if spec.kind == "linear":
        out = rate * t_arr + offset
    else:
        out = spec.capacity * expit(rate * (t_arr - offset))
    return out if t_arr.ndim else float(out)


def eval_seasonality(t, spec: SeasonalitySpec):
    """Fourier sum at time t (scalar or array)."""
    t_arr = np.asarray(t, dtype=float)
    k = np.arange(1, spec.n_terms + 1)
    angles = 2.0 * np.pi * t_arr[..., None] * k / spec.period
    out = np.cos(angles) @ spec.cos_coef + np.sin(angles) @ spec.sin_coef
    return out if t_arr.ndim else float(out)


def eval_holiday(t, spec: HolidaySpec, exog_coef=None, exog_row=None):
    """Event effects at time t, plus the exogenous dot product if given."""
    t_arr = np.asarray(t)
    out = np.zeros(t_arr.shape, dtype=float)
    for effect, times in zip(spec.effects, spec.times):
        out = out + effect * np.isin(t_arr, times)
    if exog_row is not None:
        row = np.asarray(exog_row, dtype=float)
        coef = np.zeros(0) if exog_coef is None else np.asarray(exog_coef, dtype=float)
        if row.shape[-1] != coef.shape[0]:
            raise DataError(
                f"exogenous row width {row.shape[-1]} does not match "
                f"{coef.shape[0]} coefficients"
            )
        out = out + row @ coef
    return out if t_arr.ndim else float(out)


def model_value(model: AdditiveModel, t, exog=None):
    """The additive sum g + s + h; the one evaluator fit/predict/plots use."""
    val = eval_trend(t, model.trend)
    for spec in model.seasonalities:
        val = val + eval_seasonality(t, spec)
    if model.exog_coef.shape[0] and exog is None:
        exog = np.zeros(np.shape(t) + (model.exog_coef.shape[0],))
    if model.exog_coef.shape[0]:
        val = val + eval_holiday(t, model.holidays, model.exog_coef, exog)
    else:
        val = val + eval_holiday(t, model.holidays)
    return val


def linear_gammas(changepoints: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Offset adjustments that keep the piecewise-linear trend continuous."""
    return -changepoints * delta


def logistic_gammas(k: float, m: float, changepoints, delta) -> np.ndarray:
    """Offset adjustments that keep the logistic growth curve continuous."""
    gamma = np.zeros(len(changepoints))
    rate = k
    offset = m
    for j, (s, d) in enumerate(zip(changepoints, delta)):
        new_rate = rate + d
        if new_rate == 0 or rate == 0:
            raise ModelError("logistic trend rate passes through zero")
        gamma[j] = (s - offset) * (1.0 - rate / new_rate)
        offset += gamma[j]
        rate = new_rate
    return gamma


def _tied_trend(kind, k, m, changepoints, delta, capacity) -> TrendSpec:
    changepoints = np.asarray(changepoints, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if kind == "linear":
        gamma = linear_gammas(changepoints, delta)
    else:
        gamma = logistic_gammas(k, m, changepoints, delta)
    return TrendSpec(
        kind=kind, k=k, m=m, changepoints=changepoints, delta=delta,
        gamma=gamma, capacity=capacity,
    )


@dataclass(frozen=True)
class SeasonalityConfig:
    name: str
    period: float
    n_terms: int


WEEKLY = SeasonalityConfig("weekly", 5.0, 3)
YEARLY = SeasonalityConfig("yearly", 252.0, 10)


@dataclass(frozen=True)
class AdditiveConfig:
    """Fitting knobs; defaults follow the trading-day calendar."""

    trend: str = "linear"
    capacity: float | None = None
    n_changepoints: int = 25
    changepoint_range: float = 0.8
    lambda_delta: float = 0.0
    seasonalities: tuple[SeasonalityConfig, ...] = (WEEKLY, YEARLY)
    drop_long_periods: bool = True
    max_sweeps: int = 2000
    tol: float = 1e-12

    def validate(self) -> None:
        if self.trend not in ("linear", "logistic"):
            raise DataError(f"unknown trend kind {self.trend!r}")
        if self.trend == "logistic" and (self.capacity is None or self.capacity <= 0):
            raise DataError("logistic trend needs capacity > 0")
        if self.n_changepoints < 0:
            raise DataError("changepoint count must be >= 0")
        if not 0 < self.changepoint_range <= 1:
            raise DataError("changepoint range must lie in (0, 1]")
        if self.lambda_delta < 0:
            raise DataError("changepoint penalty must be >= 0")
        for s in self.seasonalities:
            if s.period <= 0 or s.n_terms < 1:
                raise DataError(f"seasonality {s.name!r}: need period > 0 and terms >= 1")


def place_changepoints(n_obs: int, count: int, hist_range: float) -> np.ndarray:
    """Uniform quantile positions over the first hist_range of the series.

    t=0 is excluded (it duplicates the base rate/offset columns) and
    collisions from rounding collapse, so short series get fewer points.
    """
    hist_len = int(np.floor(n_obs * hist_range))
    if count == 0 or hist_len < 2:
        return np.zeros(0)
    raw = np.linspace(0, hist_len - 1, count + 1)[1:]
    points = np.unique(np.round(raw))
    return points[points > 0].astype(float)


def _harmonics(period: float, n_terms: int) -> list[tuple[int, bool, bool]]:
    """Which (harmonic, use_cos, use_sin) columns are identifiable.

    On the integer bar grid an integer period folds harmonics above half
    the period onto lower ones (the columns are bitwise identical), and a
    harmonic at exactly half the period has an identically zero sine.
    Only the first representative of each folded frequency is kept; the
    dropped coefficients stay pinned at zero, which leaves the model span
    and the least-squares optimum unchanged.
    """
    rounded = round(period)
    if abs(period - rounded) >= 1e-9:
        return [(k, True, True) for k in range(1, n_terms + 1)]
    kept = []
    seen: set[int] = set()
    for k in range(1, n_terms + 1):
        f = k % rounded
        folded = min(f, rounded - f)
        if folded == 0 or folded in seen:
            continue
        seen.add(folded)
        kept.append((k, True, 2 * folded != rounded))
    return kept


def _seasonal_columns(t: np.ndarray, period: float, kept) -> np.ndarray:
    cols = []
    for k, use_cos, use_sin in kept:
        angle = 2.0 * np.pi * t * k / period
        if use_cos:
            cols.append(np.cos(angle))
        if use_sin:
            cols.append(np.sin(angle))
    return np.column_stack(cols) if cols else np.zeros((t.shape[0], 0))


def _holiday_matrix(n_obs: int, holidays) -> tuple[tuple[str, ...], tuple[np.ndarray, ...], np.ndarray]:
    if not holidays:
        return (), (), np.zeros((n_obs, 0))
    names = tuple(holidays)
    times = tuple(np.unique(np.asarray(sorted(holidays[n]), dtype=float)) for n in names)
    cols = np.zeros((n_obs, len(names)))
    t = np.arange(n_obs)
    for j, tj in enumerate(times):
        cols[:, j] = np.isin(t, tj)
    return names, times, cols


def _soft_threshold(x: float, lam: float) -> float:
    if x > lam:
        return x - lam
    if x < -lam:
        return x + lam
    return 0.0


def _coordinate_descent(X, y, beta, delta_cols, lam, max_sweeps, tol):
    """Minimize ||y - X b||^2 + lam * sum |b_j| over the delta coordinates."""
    norms = np.einsum("ij,ij->j", X, X)
    resid = y - X @ beta
    for _ in range(max_sweeps):
        worst = 0.0
        for j in range(X.shape[1]):
            if norms[j] == 0.0:
                continue
            old = beta[j]
            rho = X[:, j] @ resid + norms[j] * old
            if j in delta_cols:
                new = _soft_threshold(rho, lam / 2.0) / norms[j]
            else:
                new = rho / norms[j]
            if new != old:
                resid += X[:, j] * (old - new)
                beta[j] = new
                worst = max(worst, abs(new - old))
        if worst < tol:
            break
    return beta


def fit(
    values,
    config: AdditiveConfig = AdditiveConfig(),
    *,
    holidays=None,
    exogenous=None,
    exog_names: tuple[str, ...] = (),
    origin: str = "",
) -> AdditiveModel:
    """Fit the decomposition to one value series by penalized least squares.

    holidays maps event name to the bar indices it covers (future indices
    are kept for prediction).  exogenous is a (T, K) regressor matrix
    aligned with the series; future regressor values default to zero at
    prediction time.
    """
    config.validate()
    y = np.asarray(values, dtype=float)
    if y.ndim != 1 or y.shape[0] < 4:
        raise DataError("need a 1-D series of at least 4 values")
    if not np.all(np.isfinite(y)):
        raise DataError("series contains non-finite values")
    T = y.shape[0]
    t = np.arange(T, dtype=float)

    seasonals = []
    for s in config.seasonalities:
        if 2.0 * s.period > T:
            if config.drop_long_periods:
                continue
            raise DataError(
                f"seasonality {s.name!r}: series length {T} is below twice the period"
            )
        seasonals.append(s)

    if exogenous is None:
        exog = np.zeros((T, 0))
    else:
        exog = np.asarray(exogenous, dtype=float)
        if exog.ndim == 1:
            exog = exog[:, None]
        if exog.shape[0] != T:
            raise DataError(f"exogenous matrix has {exog.shape[0]} rows, series has {T}")
    if exog.shape[1] and len(exog_names) != exog.shape[1]:
        raise DataError("exogenous names and columns differ in length")

    changepoints = place_changepoints(T, config.n_changepoints, config.changepoint_range)
    hol_names, hol_times, hol_cols = _holiday_matrix(T, holidays)

    logistic = config.trend == "logistic"
    blocks: list[np.ndarray] = []
    labels: list[str] = []
    if not logistic:
        blocks.append(np.column_stack([t, np.ones(T)]))
        labels += ["k", "m"]
        if changepoints.shape[0]:
            blocks.append(np.maximum(t[:, None] - changepoints, 0.0) * (t[:, None] >= changepoints))
            labels += [f"delta_{j}" for j in range(changepoints.shape[0])]
    kept_harmonics = [_harmonics(s.period, s.n_terms) for s in seasonals]
    for s, kept in zip(seasonals, kept_harmonics):
        blocks.append(_seasonal_columns(t, s.period, kept))
        for k, use_cos, use_sin in kept:
            if use_cos:
                labels.append(f"{s.name}_cos{k}")
            if use_sin:
                labels.append(f"{s.name}_sin{k}")
    if hol_cols.shape[1]:
        blocks.append(hol_cols)
        labels += list(hol_names)
    if exog.shape[1]:
        blocks.append(exog)
        labels += list(exog_names)
    X = np.column_stack(blocks) if blocks else np.zeros((T, 0))

    if logistic:
        beta, trend = _fit_logistic(y, t, X, changepoints, config)
    else:
        delta_cols = {j for j, lab in enumerate(labels) if lab.startswith("delta_")}
        beta = _solve_linear(X, y, delta_cols, config, labels)
        J = changepoints.shape[0]
        trend = _tied_trend("linear", beta[0], beta[1], changepoints, beta[2 : 2 + J], None)

    # Split the linear-block coefficients back into their components.
    pos = 0 if logistic else 2 + changepoints.shape[0]
    spec_list = []
    for s, kept in zip(seasonals, kept_harmonics):
        cos = np.zeros(s.n_terms)
        sin = np.zeros(s.n_terms)
        for k, use_cos, use_sin in kept:
            if use_cos:
                cos[k - 1] = beta[pos]
                pos += 1
            if use_sin:
                sin[k - 1] = beta[pos]
                pos += 1
        spec_list.append(SeasonalitySpec(s.period, cos, sin, s.name))
    effects = beta[pos : pos + len(hol_names)].copy()
    pos += len(hol_names)
    exog_coef = beta[pos:].copy()

    model = AdditiveModel(
        trend=trend,
        seasonalities=tuple(spec_list),
        holidays=HolidaySpec(hol_names, effects, hol_times),
        exog_names=tuple(exog_names),
        exog_coef=exog_coef,
        residual_sigma=0.0,
        n_obs=T,
        origin=origin,
    )
    fitted = model_value(model, t, exog if exog.shape[1] else None)
    sigma = float(np.std(y - fitted))
    model = AdditiveModel(
        trend=trend,
        seasonalities=model.seasonalities,
        holidays=model.holidays,
        exog_names=model.exog_names,
        exog_coef=exog_coef,
        residual_sigma=sigma,
        n_obs=T,
        origin=origin,
    )
    model.validate()
    return model


def _solve_linear(X, y, delta_cols, config: AdditiveConfig, labels) -> np.ndarray:
    if X.shape[1] == 0:
        raise DataError("model has no free parameters")
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        bad = ", ".join(labels[: X.shape[1]])
        raise ModelError(
            f"ill-conditioned fit: design rank {rank} < {X.shape[1]} columns ({bad})"
        )
    if config.lambda_delta > 0 and delta_cols:
        beta = _coordinate_descent(
            X, y, beta.copy(), delta_cols, config.lambda_delta,
            config.max_sweeps, config.tol,
        )
    return beta


def _fit_logistic(y, t, X_linear, changepoints, config: AdditiveConfig):
    """Alternate logistic-trend optimization with a linear solve.

    Trend parameters (k, m, delta) move by quasi-Newton steps on the
    squared error with the linear part frozen; the seasonal/holiday/
    exogenous coefficients re-solve by least squares in between.
    """
    C = config.capacity
    J = changepoints.shape[0]
    eps = 1e-9
    frac = np.clip(y / C, eps, 1.0 - eps)
    z = np.log(frac / (1.0 - frac))
    slope, intercept = np.polyfit(t, z, 1)
    k0 = slope if abs(slope) > 1e-8 else 1e-8
    params = np.concatenate([[k0, -intercept / k0], np.zeros(J)])
    beta = np.zeros(X_linear.shape[1])

    def trend_of(p):
        return _tied_trend("logistic", p[0], p[1], changepoints, p[2:], C)

    def objective(p):
        try:
            g = eval_trend(t, trend_of(p))
        except ModelError:
            return 1e30
        r = y - g - (X_linear @ beta if beta.size else 0.0)
        return float(r @ r)

    for _ in range(8):
        res = minimize(objective, params, method="L-BFGS-B", options={"maxiter": 300})
        params = res.x
        if X_linear.shape[1]:
            g = eval_trend(t, trend_of(params))
            beta, _, rank, _ = np.linalg.lstsq(X_linear, y - g, rcond=None)
            if rank < X_linear.shape[1]:
                raise ModelError("ill-conditioned fit: singular seasonal design")
        else:
            break
    return beta, trend_of(params)


@dataclass(frozen=True)
class IntervalForecast:
    """Per-step deterministic mean with empirical lower/upper quantiles."""

    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def predict_with_interval(
    model: AdditiveModel,
    future_len: int,
    n_sims: int = 1000,
    level: float = 0.8,
    seed: int = 0,
    exog_future=None,
) -> IntervalForecast:
    """Extrapolate the mean path and band it with simulated quantiles.

    Each simulated path re-draws future changepoints at the historical
    frequency (J per n_obs bars) with double-exponential rate adjustments
    matched to the mean historical magnitude, then adds Gaussian noise
    with the residual spread.  The band is widened if needed so it always
    contains the deterministic mean.
    """
    model.validate()
    if future_len < 1:
        raise DataError("future length must be >= 1")
    if not 0.0 < level < 1.0:
        raise DataError(f"coverage level {level} outside (0, 1)")
    if n_sims < 100:
        raise DataError("need at least 100 simulations for quantile bands")
    t_future = np.arange(model.n_obs, model.n_obs + future_len, dtype=float)
    if exog_future is not None:
        exog_future = np.asarray(exog_future, dtype=float)
        if exog_future.shape != (future_len, len(model.exog_names)):
            raise DataError("future exogenous matrix shape mismatch")
    mean = model_value(model, t_future, exog_future)

    J = model.trend.changepoints.shape[0]
    cp_prob = J / model.n_obs if model.n_obs else 0.0
    laplace_scale = float(np.mean(np.abs(model.trend.delta))) if J else 0.0
    base_rest = mean - eval_trend(t_future, model.trend)

    rng = np.random.default_rng(seed)
    paths = np.empty((n_sims, future_len))
    for i in range(n_sims):
        mask = rng.random(future_len) < cp_prob
        n_new = int(mask.sum())
        trend_spec = model.trend
        if n_new:
            new_delta = rng.laplace(0.0, laplace_scale, size=n_new)
            cps = np.concatenate([model.trend.changepoints, t_future[mask]])
            deltas = np.concatenate([model.trend.delta, new_delta])
            trend_spec = _tied_trend(
                model.trend.kind, model.trend.k, model.trend.m, cps, deltas,
                model.trend.capacity,
            )
        noise = rng.normal(0.0, model.residual_sigma, size=future_len)
        paths[i] = eval_trend(t_future, trend_spec) + base_rest + noise

    alpha = (1.0 - level) / 2.0
    lower = np.quantile(paths, alpha, axis=0)
    upper = np.quantile(paths, 1.0 - alpha, axis=0)
    return IntervalForecast(
        mean=mean, lower=np.minimum(lower, mean), upper=np.maximum(upper, mean)
    )


FORMAT_TAG = "stockcast-additive"
FORMAT_VERSION = 1


def save_additive(model: AdditiveModel, path: str | Path) -> None:
    """Versioned text layout; load_additive round-trips bit-exactly."""
    tr = model.trend
    lines = [
        f"{FORMAT_TAG} {FORMAT_VERSION}",
        f"trend {tr.kind}",
        f"k {fmt(tr.k)}",
        f"m {fmt(tr.m)}",
        f"capacity {'-' if tr.capacity is None else fmt(tr.capacity)}",
        f"n_obs {model.n_obs}",
        f"origin {model.origin or '-'}",
        f"unit {model.unit}",
    ]
    lines.extend(array_lines("changepoints", tr.changepoints))
    lines.extend(array_lines("delta", tr.delta))
    lines.extend(array_lines("gamma", tr.gamma))
    lines.append(f"seasonalities {len(model.seasonalities)}")
    for s in model.seasonalities:
        lines.append(f"seasonality {s.name or '-'} {fmt(s.period)} {s.n_terms}")
        lines.extend(array_lines("cos", s.cos_coef))
        lines.extend(array_lines("sin", s.sin_coef))
    lines.append(f"holidays {model.holidays.n_events}")
    for name, effect, times in zip(
        model.holidays.names, model.holidays.effects, model.holidays.times
    ):
        lines.append(f"holiday {name} {fmt(effect)}")
        lines.extend(array_lines("times", times))
    lines.append(f"exogenous {' '.join(model.exog_names)}")
    lines.extend(array_lines("exog_coef", model.exog_coef))
    lines.append(f"residual_sigma {fmt(model.residual_sigma)}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_additive(path: str | Path) -> AdditiveModel:
    reader = LineReader(Path(path).read_text())
    tag = reader.expect(FORMAT_TAG)
    if int(tag[0]) != FORMAT_VERSION:
        raise DataError(f"unsupported model version {tag[0]}")
    kind = reader.expect("trend")[0]
    k = reader.scalar("k")
    m = reader.scalar("m")
    cap_tok = reader.expect("capacity")[0]
    capacity = None if cap_tok == "-" else float(cap_tok)
    n_obs = reader.integer("n_obs")
    origin_tok = reader.expect("origin")[0]
    unit = reader.expect("unit")[0]
    trend = TrendSpec(
        kind=kind, k=k, m=m,
        changepoints=reader.array("changepoints"),
        delta=reader.array("delta"),
        gamma=reader.array("gamma"),
        capacity=capacity,
    )
    seasonals = []
    for _ in range(reader.integer("seasonalities")):
        name, period, _n = reader.expect("seasonality")
        seasonals.append(
            SeasonalitySpec(
                float(period), reader.array("cos"), reader.array("sin"),
                "" if name == "-" else name,
            )
        )
    names, effects, times = [], [], []
    for _ in range(reader.integer("holidays")):
        name, effect = reader.expect("holiday")
        names.append(name)
        effects.append(float(effect))
        times.append(reader.array("times"))
    exog_names = tuple(reader.expect("exogenous"))
    exog_coef = reader.array("exog_coef")
    sigma = reader.scalar("residual_sigma")
    model = AdditiveModel(
        trend=trend,
        seasonalities=tuple(seasonals),
        holidays=HolidaySpec(tuple(names), np.array(effects), tuple(times)),
        exog_names=exog_names,
        exog_coef=exog_coef,
        residual_sigma=sigma,
        n_obs=n_obs,
        origin="" if origin_tok == "-" else origin_tok,
        unit=unit,
    )
    model.validate()
    return model
