"""OHLCV ingestion, validation, scaling, windowing, and backtest folds.

Everything downstream consumes either an :class:`OhlcvSeries` (validated
bars) or the numpy matrices derived from it here.  All functions are pure:
they never mutate their inputs and hold no module state.
"""

from __future__ import annotations

import datetime as dt
import urllib.error
import urllib.request
from dataclasses import dataclass

import numpy as np

from .errors import DataError, FetchError

CSV_HEADER = "date,open,high,low,close,volume"

#: Column names accepted by :meth:`OhlcvSeries.feature_matrix`.
FEATURE_NAMES = ("open", "high", "low", "close", "volume")


@dataclass(frozen=True)
class OhlcvBar:
    """One daily market bar: prices must be positive and OHLC-consistent."""

    date: dt.date
    open: float
    high: float
    low: float
    close: float
    volume: int

    def validate(self) -> None:
        if min(self.open, self.high, self.low, self.close) <= 0:
            raise DataError(f"{self.date}: prices must be positive")
        if self.volume < 0:
            raise DataError(f"{self.date}: volume must be non-negative")
        if self.low > min(self.open, self.close):
            raise DataError(f"{self.date}: low exceeds open/close")
        if self.high < max(self.open, self.close):
            raise DataError(f"{self.date}: high is below open/close")


@dataclass(frozen=True)
class OhlcvSeries:
    """A validated, date-ascending sequence of bars for one symbol."""

    symbol: str
    bars: tuple[OhlcvBar, ...]

    def __post_init__(self):
        if not self.bars:
            raise DataError(f"{self.symbol or 'series'}: no bars")
        for bar in self.bars:
            bar.validate()
        for prev, cur in zip(self.bars, self.bars[1:]):
            if cur.date <= prev.date:
                raise DataError(
                    f"{self.symbol or 'series'}: dates not strictly increasing "
                    f"at {cur.date} (follows {prev.date})"
                )

    def __len__(self) -> int:
        return len(self.bars)

    @property
    def dates(self) -> list[dt.date]:
        return [b.date for b in self.bars]

    def column(self, name: str) -> np.ndarray:
        if name not in FEATURE_NAMES:
            raise DataError(f"unknown column {name!r}")
        return np.array([getattr(b, name) for b in self.bars], dtype=float)

    def feature_matrix(self, names: list[str] | tuple[str, ...]) -> np.ndarray:
        """Stack the named columns into a (T, F) float matrix."""
        return np.column_stack([self.column(n) for n in names])

    def slice(self, start: int, stop: int) -> "OhlcvSeries":
        """Sub-series over bar indices [start, stop)."""
        return OhlcvSeries(self.symbol, self.bars[start:stop])


def parse_csv(raw: bytes | str, symbol: str = "") -> OhlcvSeries:
    """Parse `date,open,high,low,close,volume` CSV text into a validated series.

    Rows must already be in ascending date order; out-of-order input is an
    error, not silently reordered.  Malformed rows are reported with their
    1-based line number.
    """
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DataError(f"input is not UTF-8: {exc}") from None
    else:
        text = raw
    lines = text.replace("\r\n", "\n").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise DataError("empty file")
    header = lines[0].strip()
    if header != CSV_HEADER:
        raise DataError(f"line 1: expected header {CSV_HEADER!r}, got {header!r}")
    bars = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 6:
            raise DataError(f"line {lineno}: expected 6 fields, got {len(parts)}")
        try:
            bar = OhlcvBar(
                date=dt.date.fromisoformat(parts[0]),
                open=float(parts[1]),
                high=float(parts[2]),
                low=float(parts[3]),
                close=float(parts[4]),
                volume=int(parts[5]),
            )
        except (ValueError, DataError) as exc:
            raise DataError(f"line {lineno}: {exc}") from None
        bars.append(bar)
    if not bars:
        raise DataError("no data rows after header")
    return OhlcvSeries(symbol=symbol, bars=tuple(bars))


def serialize_csv(series: OhlcvSeries) -> bytes:
    """Inverse of :func:`parse_csv`: emit the canonical CSV layout."""
    lines = [CSV_HEADER]
    for b in series.bars:
        lines.append(
            f"{b.date.isoformat()},{b.open!r},{b.high!r},{b.low!r},{b.close!r},{b.volume}"
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


def fetch_remote(
    endpoint: str,
    symbol: str,
    start: str | dt.date,
    end: str | dt.date,
    timeout: float = 10.0,
) -> bytes:
    """HTTP-GET quote CSV from an endpoint template.

    The template is expanded by substituting ``{symbol}``, ``{start}`` and
    ``{end}``.  Returns the raw body for :func:`parse_csv`; never writes files.
    """
    url = endpoint.format(symbol=symbol, start=str(start), end=str(end))
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp:
            status = getattr(resp, "status", 200)
            if status != 200:
                raise FetchError(f"{url}: HTTP status {status}")
            return resp.read()
    except urllib.error.HTTPError as exc:
        raise FetchError(f"{url}: HTTP status {exc.code}") from None
    except urllib.error.URLError as exc:
        raise FetchError(f"{url}: {exc.reason}") from None


@dataclass(frozen=True)
class ScaleParams:
    """Per-feature min/max fitted on training data only."""

    minimum: np.ndarray
    maximum: np.ndarray

    @property
    def span(self) -> np.ndarray:
        return self.maximum - self.minimum


def scale_minmax(matrix: np.ndarray) -> tuple[np.ndarray, ScaleParams]:
    """Map each column affinely onto [0, 1]; constant columns are rejected."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] < 2:
        raise DataError("need a 2-D matrix with at least 2 rows")
    lo = matrix.min(axis=0)
    hi = matrix.max(axis=0)
    flat = np.flatnonzero(hi <= lo)
    if flat.size:
        raise DataError(f"constant column(s) {flat.tolist()}: zero min-max span")
    params = ScaleParams(minimum=lo, maximum=hi)
    return (matrix - lo) / (hi - lo), params


def apply_scale(matrix: np.ndarray, params: ScaleParams) -> np.ndarray:
    """Scale new data with previously fitted parameters (no refitting)."""
    return (np.asarray(matrix, dtype=float) - params.minimum) / params.span


def inverse_scale(scaled: np.ndarray, params: ScaleParams) -> np.ndarray:
    return np.asarray(scaled, dtype=float) * params.span + params.minimum


def inverse_scale_column(values: np.ndarray, params: ScaleParams, col: int) -> np.ndarray:
    """Undo the min-max map for a single feature column."""
    if not 0 <= col < params.minimum.shape[0]:
        raise DataError(f"scale parameters do not cover column {col}")
    return np.asarray(values, dtype=float) * params.span[col] + params.minimum[col]


@dataclass(frozen=True)
class WindowedDataset:
    """Supervised multistep windows: inputs (n, L, F), targets (n, H)."""

    inputs: np.ndarray
    targets: np.ndarray
    target_feature: int

    def __len__(self) -> int:
        return self.inputs.shape[0]

    @property
    def lookback(self) -> int:
        return self.inputs.shape[1]

    @property
    def horizon(self) -> int:
        return self.targets.shape[1]

    @property
    def n_features(self) -> int:
        return self.inputs.shape[2]

    def subset(self, idx: np.ndarray) -> "WindowedDataset":
        return WindowedDataset(self.inputs[idx], self.targets[idx], self.target_feature)


def split_sequences(
    matrix: np.ndarray, lookback: int, horizon: int, target_col: int
) -> WindowedDataset:
    """Rearrange a (T, F) matrix into lookback/horizon training windows.

    Sample i reads input rows [i, i+L) across all features and targets
    rows [i+L, i+L+H) of the target column, so targets immediately follow
    their window.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2:
        raise DataError("matrix must be 2-D (T, F)")
    T, F = matrix.shape
    if not 0 <= target_col < F:
        raise DataError(f"target column {target_col} outside 0..{F - 1}")
    if lookback < 1 or horizon < 1:
        raise DataError("lookback and horizon must be >= 1")
    n = T - lookback - horizon + 1
    if n < 1:
        raise DataError(
            f"series of length {T} too short for lookback {lookback} + horizon {horizon}"
        )
    inputs = np.empty((n, lookback, F))
    targets = np.empty((n, horizon))
    for i in range(n):
        inputs[i] = matrix[i : i + lookback]
        targets[i] = matrix[i + lookback : i + lookback + horizon, target_col]
    return WindowedDataset(inputs=inputs, targets=targets, target_feature=target_col)


@dataclass(frozen=True)
class BacktestFolds:
    """Ordered (train_range, test_range) index pairs over one series.

    Test ranges are consecutive, disjoint, and cover the evaluation tail;
    each train range ends exactly where its test range begins.
    """

    folds: tuple[tuple[tuple[int, int], tuple[int, int]], ...]

    def __len__(self) -> int:
        return len(self.folds)

    def __iter__(self):
        return iter(self.folds)


def rolling_splits(series_length: int, n_folds: int, test_len: int) -> BacktestFolds:
    """Rolling-origin evaluation folds over the last n_folds*test_len points.

    Fold k (1-based) trains on [0, T - (n_folds - k + 1) * test_len) and
    tests on the following test_len points.
    """
    if n_folds < 1 or test_len < 1:
        raise DataError("n_folds and test_len must be >= 1")
    if series_length <= n_folds * test_len:
        raise DataError(
            f"series length {series_length} leaves no training data for "
            f"{n_folds} folds of {test_len}"
        )
    folds = []
    for k in range(1, n_folds + 1):
        train_end = series_length - (n_folds - k + 1) * test_len
        folds.append(((0, train_end), (train_end, train_end + test_len)))
    return BacktestFolds(folds=tuple(folds))
