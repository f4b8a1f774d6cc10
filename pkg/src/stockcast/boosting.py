"""Gradient-boosted regression trees for residual correction.

Squared-loss boosting: each tree fits the current residuals, leaves carry
sum/(count + l2) values, and splits are chosen by the variance-reduction
gain over equal-frequency histogram boundaries.  Growth is leaf-wise (the
open leaf with the best gain splits first) up to max_leaves.  The usual
pairing here is with the additive forecaster: the booster learns that
model's in-sample residuals from lag, calendar and sentiment features,
and hybrid_forecast applies the correction recursively over the horizon.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._serde import LineReader, fmt
from .additive import AdditiveModel, model_value
from .errors import DataError

N_CALENDAR = 5  # day-of-week one-hot width, bar index mod 5


@dataclass(frozen=True)
class TreeNode:
    """Binary node: feature < 0 marks a leaf carrying value."""

    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    value: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


@dataclass(frozen=True)
class RegressionTree:
    root: TreeNode

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.empty(X.shape[0])
        self._fill(self.root, X, np.arange(X.shape[0]), out)
        return out

    def _fill(self, node: TreeNode, X, rows, out) -> None:
        if node.is_leaf:
            out[rows] = node.value
            return
        go_left = X[rows, node.feature] <= node.threshold
        self._fill(node.left, X, rows[go_left], out)
        self._fill(node.right, X, rows[~go_left], out)

    def n_leaves(self) -> int:
        def count(node):
            return 1 if node.is_leaf else count(node.left) + count(node.right)

        return count(self.root)


@dataclass(frozen=True)
class BoostConfig:
    n_trees: int = 100
    max_leaves: int = 15
    min_samples_leaf: int = 5
    l2_leaf_penalty: float = 1.0
    learning_rate: float = 0.1
    max_bins: int = 64

    def validate(self) -> None:
        if self.n_trees < 1:
            raise DataError("need at least one boosting round")
        if self.max_leaves < 1:
            raise DataError("need at least one leaf")
        if self.min_samples_leaf < 1:
            raise DataError("min samples per leaf must be >= 1")
        if self.max_bins < 2:
            raise DataError("need at least two histogram bins")
        if not 0.0 < self.learning_rate <= 1.0:
            raise DataError("learning rate must lie in (0, 1]")
        if self.l2_leaf_penalty < 0:
            raise DataError("leaf penalty must be >= 0")


@dataclass(frozen=True)
class BoostedEnsemble:
    """base_score + learning_rate * sum of tree outputs, in training order."""

    base_score: float
    trees: tuple[RegressionTree, ...]
    learning_rate: float
    n_features: int

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise DataError(
                f"feature width {X.shape[1]} does not match training ({self.n_features})"
            )
        out = np.full(X.shape[0], self.base_score)
        for tree in self.trees:
            out += self.learning_rate * tree.predict(X)
        return out


def bin_boundaries(col: np.ndarray, max_bins: int) -> np.ndarray:
    """Candidate thresholds: midpoints between distinct neighbours.

    Few distinct values -> every midpoint (exhaustive splitting); more ->
    equal-frequency quantile values snapped to the midpoint before their
    next distinct neighbour, so the rule depends only on value order and
    survives monotone feature transforms.
    """
    distinct = np.unique(col)
    if distinct.size <= 1:
        return np.zeros(0)
    if distinct.size <= max_bins:
        return (distinct[:-1] + distinct[1:]) / 2.0
    qs = np.arange(1, max_bins) / max_bins
    vals = np.unique(np.quantile(col, qs, method="inverted_cdf"))
    idx = np.searchsorted(distinct, vals)
    idx = idx[idx < distinct.size - 1]
    return np.unique((distinct[idx] + distinct[idx + 1]) / 2.0)


class _Region:
    """Open or split leaf candidate during leaf-wise growth."""

    __slots__ = ("rows", "value", "gain", "feature", "threshold", "children")

    def __init__(self, rows, value):
        self.rows = rows
        self.value = value
        self.gain = -np.inf
        self.feature = -1
        self.threshold = 0.0
        self.children: tuple["_Region", "_Region"] | None = None


def _score_region(region, X, resid, bounds, bin_idx, lam, min_leaf) -> None:
    """Find the best histogram split for one region (None if no gain)."""
    rows = region.rows
    n = rows.size
    S = float(resid[rows].sum())
    parent = S * S / (n + lam)
    best_gain = 0.0
    for f in range(X.shape[1]):
        nb = bounds[f].shape[0]
        if nb == 0:
            continue
        idx = bin_idx[f][rows]
        counts = np.bincount(idx, minlength=nb + 1)
        sums = np.bincount(idx, weights=resid[rows], minlength=nb + 1)
        left_n = np.cumsum(counts)[:-1]
        left_s = np.cumsum(sums)[:-1]
        right_n = n - left_n
        right_s = S - left_s
        with np.errstate(invalid="ignore"):
            gains = (
                left_s**2 / (left_n + lam)
                + right_s**2 / (right_n + lam)
                - parent
            )
        gains[(left_n < min_leaf) | (right_n < min_leaf)] = -np.inf
        j = int(np.argmax(gains))
        if gains[j] > best_gain + 1e-12:
            best_gain = float(gains[j])
            region.gain = best_gain
            region.feature = f
            region.threshold = float(bounds[f][j])


def _grow_tree(X, resid, cfg: BoostConfig, bounds, bin_idx) -> RegressionTree:
    lam = cfg.l2_leaf_penalty
    all_rows = np.arange(X.shape[0])

    def leaf_value(rows):
        return float(resid[rows].sum() / (rows.size + lam))

    root = _Region(all_rows, leaf_value(all_rows))
    open_regions = [root]
    if cfg.max_leaves > 1:
        _score_region(root, X, resid, bounds, bin_idx, lam, cfg.min_samples_leaf)
    n_leaves = 1
    while n_leaves < cfg.max_leaves:
        best = None
        for region in open_regions:
            if region.feature >= 0 and (best is None or region.gain > best.gain + 1e-12):
                best = region
        if best is None:
            break
        go_left = X[best.rows, best.feature] <= best.threshold
        left = _Region(best.rows[go_left], leaf_value(best.rows[go_left]))
        right = _Region(best.rows[~go_left], leaf_value(best.rows[~go_left]))
        best.children = (left, right)
        open_regions.remove(best)
        for child in (left, right):
            _score_region(child, X, resid, bounds, bin_idx, lam, cfg.min_samples_leaf)
            open_regions.append(child)
        n_leaves += 1

    def freeze(region: _Region) -> TreeNode:
        if region.children is None:
            return TreeNode(value=region.value)
        left, right = region.children
        return TreeNode(
            feature=region.feature,
            threshold=region.threshold,
            left=freeze(left),
            right=freeze(right),
        )

    return RegressionTree(freeze(root))


def fit_booster(features, targets, cfg: BoostConfig = BoostConfig()) -> BoostedEnsemble:
    """Boost squared-loss trees on the given rows.

    Data with no usable split (constant features) yields a base-score-only
    ensemble rather than an error.
    """
    cfg.validate()
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("need a non-empty 2-D feature matrix")
    if y.shape != (X.shape[0],):
        raise DataError("targets must align with feature rows")
    if X.shape[0] < 2 * cfg.min_samples_leaf:
        raise DataError(
            f"need at least {2 * cfg.min_samples_leaf} rows to honour min_samples_leaf"
        )
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("features and targets must be finite")

    bounds = [bin_boundaries(X[:, f], cfg.max_bins) for f in range(X.shape[1])]
    bin_idx = [
        np.searchsorted(bounds[f], X[:, f], side="left") for f in range(X.shape[1])
    ]
    base = float(y.mean())
    pred = np.full(y.shape[0], base)
    trees: list[RegressionTree] = []
    for _ in range(cfg.n_trees):
        resid = y - pred
        tree = _grow_tree(X, resid, cfg, bounds, bin_idx)
        if tree.root.is_leaf and tree.root.value == 0.0:
            break
        trees.append(tree)
        pred += cfg.learning_rate * tree.predict(X)
    return BoostedEnsemble(
        base_score=base,
        trees=tuple(trees),
        learning_rate=cfg.learning_rate,
        n_features=X.shape[1],
    )


def feature_layout(lags: tuple[int, ...]) -> int:
    return len(lags) + N_CALENDAR + 1


def _feature_row(history, t: int, lags, sentiment_value: float) -> np.ndarray:
    row = np.empty(feature_layout(lags))
    for j, lag in enumerate(lags):
        row[j] = history[t - lag]
    row[len(lags) : len(lags) + N_CALENDAR] = 0.0
    row[len(lags) + (t % N_CALENDAR)] = 1.0
    row[-1] = sentiment_value
    return row


def build_feature_frame(target, residuals, lags, sentiment=None):
    """Rows [lag values, day-of-week one-hot, sentiment] -> residual target.

    The day-of-week slot is the bar index mod 5 (trading-day calendar);
    rows whose lags would reach before the series start are dropped.
    Missing sentiment fills with zero.
    """
    target = np.asarray(target, dtype=float)
    residuals = np.asarray(residuals, dtype=float)
    if target.shape != residuals.shape or target.ndim != 1:
        raise DataError("target and residual series must be equal-length 1-D")
    lags = tuple(sorted(set(int(l) for l in lags)))
    if not lags or lags[0] < 1:
        raise DataError("need at least one positive lag")
    max_lag = lags[-1]
    T = target.shape[0]
    if T <= max_lag:
        raise DataError(f"series length {T} does not cover max lag {max_lag}")
    if sentiment is None:
        sentiment = np.zeros(T)
    else:
        sentiment = np.asarray(sentiment, dtype=float)
        if sentiment.shape != (T,):
            raise DataError("sentiment series must align with the target")
    rows = np.stack(
        [_feature_row(target, t, lags, sentiment[t]) for t in range(max_lag, T)]
    )
    return rows, residuals[max_lag:].copy()


def hybrid_forecast(
    model: AdditiveModel,
    ensemble: BoostedEnsemble,
    horizon: int,
    target_history,
    lags: tuple[int, ...],
    sentiment_future=None,
) -> np.ndarray:
    """Additive extrapolation plus boosted residual correction per step.

    Lag features update recursively: each corrected forecast feeds the
    lags of later steps.  Future sentiment defaults to zero.
    """
    history = list(np.asarray(target_history, dtype=float))
    lags = tuple(sorted(set(int(l) for l in lags)))
    if not lags or lags[0] < 1:
        raise DataError("need at least one positive lag")
    if len(history) < lags[-1]:
        raise DataError("history shorter than the largest lag")
    if horizon < 1:
        raise DataError("horizon must be >= 1")
    if ensemble.n_features != feature_layout(lags):
        raise DataError(
            f"ensemble expects {ensemble.n_features} features, lag set yields "
            f"{feature_layout(lags)}"
        )
    if sentiment_future is not None:
        sentiment_future = np.asarray(sentiment_future, dtype=float)
        if sentiment_future.shape != (horizon,):
            raise DataError("future sentiment must have one value per step")
    T = len(history)
    out = np.empty(horizon)
    for h in range(horizon):
        t = T + h
        base = float(model_value(model, float(t)))
        senti = 0.0 if sentiment_future is None else float(sentiment_future[h])
        row = _feature_row(history, t, lags, senti)
        correction = float(ensemble.predict(row)[0])
        out[h] = base + correction
        history.append(out[h])
    return out


FORMAT_TAG = "stockcast-booster"
FORMAT_VERSION = 1


def _write_node(node: TreeNode, lines: list[str]) -> None:
    if node.is_leaf:
        lines.append(f"leaf {fmt(node.value)}")
    else:
        lines.append(f"node {node.feature} {fmt(node.threshold)}")
        _write_node(node.left, lines)
        _write_node(node.right, lines)


def _read_node(reader: LineReader) -> TreeNode:
    parts = reader.next_line().split()
    if parts[0] == "leaf":
        return TreeNode(value=float(parts[1]))
    if parts[0] != "node":
        raise DataError(f"expected node or leaf, found {parts[0]!r}")
    feature = int(parts[1])
    threshold = float(parts[2])
    left = _read_node(reader)
    right = _read_node(reader)
    return TreeNode(feature=feature, threshold=threshold, left=left, right=right)


def save_booster(ensemble: BoostedEnsemble, path: str | Path) -> None:
    """Versioned text layout: header plus each tree as a preorder list."""
    lines = [
        f"{FORMAT_TAG} {FORMAT_VERSION}",
        f"base_score {fmt(ensemble.base_score)}",
        f"learning_rate {fmt(ensemble.learning_rate)}",
        f"n_features {ensemble.n_features}",
        f"n_trees {len(ensemble.trees)}",
    ]
    for tree in ensemble.trees:
        lines.append("tree")
        _write_node(tree.root, lines)
    Path(path).write_text("\n".join(lines) + "\n")


def load_booster(path: str | Path) -> BoostedEnsemble:
    reader = LineReader(Path(path).read_text())
    tag = reader.expect(FORMAT_TAG)
    if int(tag[0]) != FORMAT_VERSION:
        raise DataError(f"unsupported model version {tag[0]}")
    base = reader.scalar("base_score")
    rate = reader.scalar("learning_rate")
    n_features = reader.integer("n_features")
    n_trees = reader.integer("n_trees")
    trees = []
    for _ in range(n_trees):
        reader.expect("tree")
        trees.append(RegressionTree(_read_node(reader)))
    return BoostedEnsemble(
        base_score=base, trees=tuple(trees), learning_rate=rate, n_features=n_features
    )
