"""Decision-tree regression ensembles built from scratch: a bagged random
forest (predictions averaged over trees) and stagewise gradient boosting
with L1/L2 leaf regularization.

Trees split greedily by variance reduction over midpoint thresholds between
consecutive distinct feature values. Ties in split score resolve to the
lowest feature index, then the lowest threshold, so fits are reproducible
bit for bit. Forest trees draw bootstrap resamples and per-split feature
subsets from per-tree deterministic seed streams; boosting rounds are
inherently sequential.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EmptyInputError, ShapeMismatchError


@dataclass(frozen=True)
class TreeNode:
    feature: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    value: Optional[float] = None

    @property
    def is_leaf(self) -> bool:
        return self.value is not None

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())


@dataclass(frozen=True)
class ForestConfig:
    n_estimators: int = 10
    max_depth: int = 10
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    bootstrap: bool = True
    feature_subsample: float = 1.0 / 3.0  # fraction of features tried per split

    def __post_init__(self):
        if min(self.n_estimators, self.max_depth,
               self.min_samples_split, self.min_samples_leaf) < 1:
            raise ValueError("integer limits must be >= 1")
        if not 0.0 < self.feature_subsample <= 1.0:
            raise ValueError("feature_subsample must be in (0, 1]")


@dataclass(frozen=True)
class BoostConfig:
    n_estimators: int = 900
    max_depth: int = 10
    learning_rate: float = 0.1
    min_samples_split_fraction: float = 0.1  # of the round's fitting rows
    subsample: float = 1.0
    reg_lambda: float = 1.0   # L2: shrinks leaf values by n/(n+lambda)
    reg_alpha: float = 0.0    # L1: soft-thresholds leaf values
    objective: str = "mae"    # or "squared"

    def __post_init__(self):
        if self.n_estimators < 0 or self.max_depth < 1:
            raise ValueError("n_estimators >= 0 and max_depth >= 1 required")
        if self.learning_rate <= 0 or not 0.0 < self.subsample <= 1.0:
            raise ValueError("learning_rate > 0 and subsample in (0, 1] required")
        if self.objective not in ("mae", "squared"):
            raise ValueError(f"unknown objective {self.objective!r}")


@dataclass(frozen=True)
class ForestModel:
    trees: tuple
    config: ForestConfig
    seed: int

    def __post_init__(self):
        if len(self.trees) != self.config.n_estimators:
            raise ValueError("tree count must equal n_estimators")


@dataclass(frozen=True)
class BoostModel:
    base_prediction: float
    trees: tuple
    config: BoostConfig
    seed: int = 0


# -- single tree ---------------------------------------------------------------

def _best_split(x: np.ndarray, y: np.ndarray, feature_indices, min_samples_leaf: int):
    """Best (sse_after, feature, threshold) over candidate features, or None.

    For each feature the rows are sorted once and every boundary between
    distinct consecutive values is scored from prefix sums in one pass.
    """
    n = y.size
    best = None  # (total_sse, feature, threshold)
    for j in feature_indices:
        order = np.argsort(x[:, j], kind="stable")
        xs = x[order, j]
        ys = y[order]
        cum = np.cumsum(ys)
        cum2 = np.cumsum(ys * ys)
        total = cum[-1]
        total2 = cum2[-1]
        i = np.arange(1, n)
        valid = xs[1:] > xs[:-1]
        if min_samples_leaf > 1:
            valid &= (i >= min_samples_leaf) & (n - i >= min_samples_leaf)
        if not np.any(valid):
            continue
        left2 = cum2[:-1] - cum[:-1] ** 2 / i
        right_sum = total - cum[:-1]
        right2 = (total2 - cum2[:-1]) - right_sum ** 2 / (n - i)
        sse = np.maximum(left2, 0.0) + np.maximum(right2, 0.0)
        sse[~valid] = np.inf
        k = int(np.argmin(sse))  # first minimum -> lowest threshold
        if best is None or sse[k] < best[0]:
            thr = xs[k] + (xs[k + 1] - xs[k]) / 2.0
            if thr >= xs[k + 1]:  # adjacent floats: keep the boundary real
                thr = xs[k]
            best = (float(sse[k]), int(j), float(thr))
    return best


def fit_tree(rows, targets, *, max_depth: int = 10, min_samples_split: int = 2,
             min_samples_leaf: int = 1, feature_fraction: float = 1.0,
             rng: np.random.Generator | None = None) -> TreeNode:
    """Grow a regression tree by greedy variance reduction.

    Growth stops at max_depth, below min_samples_split, on a zero-variance
    node, or when no boundary improves the squared-error sum. Leaves carry
    the mean target of their rows. When feature_fraction < 1 each split
    scores a fresh random subset of features drawn from rng.
    """
    x = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    y = np.asarray(targets, dtype=np.float64).ravel()
    if x.shape[0] == 0:
        raise EmptyInputError("cannot fit a tree on zero rows")
    if x.shape[0] != y.size:
        raise ShapeMismatchError("row/target count mismatch")

    n_features = x.shape[1]
    n_try = max(1, int(round(feature_fraction * n_features)))

    def grow(xs: np.ndarray, ys: np.ndarray, depth: int) -> TreeNode:
        if (depth >= max_depth or ys.size < min_samples_split
                or np.all(ys == ys[0])):
            return TreeNode(value=float(ys.mean()))
        if n_try < n_features:
            if rng is None:
                raise ValueError("feature_fraction < 1 requires an rng")
            feats = np.sort(rng.choice(n_features, size=n_try, replace=False))
        else:
            feats = range(n_features)
        parent_sse = float(((ys - ys.mean()) ** 2).sum())
        found = _best_split(xs, ys, feats, min_samples_leaf)
        if found is None or found[0] >= parent_sse:
            return TreeNode(value=float(ys.mean()))
        _, j, thr = found
        mask = xs[:, j] <= thr
        return TreeNode(feature=j, threshold=thr,
                        left=grow(xs[mask], ys[mask], depth + 1),
                        right=grow(xs[~mask], ys[~mask], depth + 1))

    return grow(x, y, 0)


def predict_tree(node: TreeNode, rows):
    """Evaluate one tree; scalar out for a single row, vector for a matrix."""
    arr = np.asarray(rows, dtype=np.float64)
    single = arr.ndim == 1
    x = np.atleast_2d(arr)
    out = np.empty(x.shape[0])
    idx = np.arange(x.shape[0])

    def walk(nd: TreeNode, which: np.ndarray):
        if which.size == 0:
            return
        if nd.is_leaf:
            out[which] = nd.value
            return
        mask = x[which, nd.feature] <= nd.threshold
        walk(nd.left, which[mask])
        walk(nd.right, which[~mask])

    walk(node, idx)
    return float(out[0]) if single else out


def _leaf_groups(node: TreeNode, x: np.ndarray):
    """Row-index arrays grouped by the leaf they fall into, with the path."""
    groups = []

    def walk(nd: TreeNode, which: np.ndarray, path: tuple):
        if nd.is_leaf:
            groups.append((path, which))
            return
        mask = x[which, nd.feature] <= nd.threshold
        walk(nd.left, which[mask], path + ("L",))
        walk(nd.right, which[~mask], path + ("R",))

    walk(node, np.arange(x.shape[0]), ())
    return groups


def _rebuild_with_values(node: TreeNode, values: dict, path: tuple = ()) -> TreeNode:
    if node.is_leaf:
        return TreeNode(value=values.get(path, node.value))
    return TreeNode(feature=node.feature, threshold=node.threshold,
                    left=_rebuild_with_values(node.left, values, path + ("L",)),
                    right=_rebuild_with_values(node.right, values, path + ("R",)))


# -- random forest -------------------------------------------------------------

def fit_forest(train, cfg: ForestConfig, seed: int) -> ForestModel:
    """Bag cfg.n_estimators trees: each draws a with-replacement resample of
    the full training size and a fresh feature subset per split, from its
    own child seed stream, so refits are identical for identical seeds."""
    x = np.atleast_2d(np.asarray(train[0], dtype=np.float64))
    y = np.asarray(train[1], dtype=np.float64).ravel()
    if x.shape[0] == 0:
        raise EmptyInputError("empty training set")
    streams = np.random.SeedSequence(seed).spawn(cfg.n_estimators)
    trees = []
    for child in streams:
        rng = np.random.Generator(np.random.PCG64(child))
        if cfg.bootstrap:
            idx = rng.integers(0, x.shape[0], size=x.shape[0])
            xs, ys = x[idx], y[idx]
        else:
            xs, ys = x, y
        trees.append(fit_tree(
            xs, ys, max_depth=cfg.max_depth,
            min_samples_split=cfg.min_samples_split,
            min_samples_leaf=cfg.min_samples_leaf,
            feature_fraction=cfg.feature_subsample, rng=rng))
    return ForestModel(trees=tuple(trees), config=cfg, seed=seed)


def predict_forest(m: ForestModel, rows):
    """Plain arithmetic mean of the member trees' predictions."""
    arr = np.asarray(rows, dtype=np.float64)
    single = arr.ndim == 1
    x = np.atleast_2d(arr)
    acc = np.zeros(x.shape[0])
    for tree in m.trees:
        acc += predict_tree(tree, x)
    acc /= len(m.trees)
    return float(acc[0]) if single else acc


# -- gradient boosting -----------------------------------------------------------

def fit_boost(train, cfg: BoostConfig, seed: int) -> BoostModel:
    """Stagewise additive fitting starting from the target mean.

    Each round fits a tree to the current pseudo-residuals: their signs
    under the mae objective, the raw residuals under squared loss. Leaf
    values are then recomputed from the actual residuals in the leaf
    (median for mae, mean for squared), shrunk by n/(n + reg_lambda) and
    soft-thresholded by reg_alpha, and added with the learning rate.
    Row subsampling (without replacement) draws from the seed stream.
    """
    x = np.atleast_2d(np.asarray(train[0], dtype=np.float64))
    y = np.asarray(train[1], dtype=np.float64).ravel()
    if x.shape[0] == 0:
        raise EmptyInputError("empty training set")
    n = x.shape[0]
    base = float(y.mean())
    current = np.full(n, base)
    rng = np.random.Generator(np.random.PCG64(seed))
    trees = []

    for _ in range(cfg.n_estimators):
        if cfg.subsample < 1.0:
            size = max(1, int(round(cfg.subsample * n)))
            idx = np.sort(rng.choice(n, size=size, replace=False))
        else:
            idx = np.arange(n)
        xs = x[idx]
        resid = y[idx] - current[idx]
        pseudo = np.sign(resid) if cfg.objective == "mae" else resid
        min_split = max(2, int(np.ceil(cfg.min_samples_split_fraction * idx.size)))
        skeleton = fit_tree(xs, pseudo, max_depth=cfg.max_depth,
                            min_samples_split=min_split)

        values = {}
        for path, rows_in_leaf in _leaf_groups(skeleton, xs):
            r = resid[rows_in_leaf]
            v = float(np.median(r)) if cfg.objective == "mae" else float(r.mean())
            v *= r.size / (r.size + cfg.reg_lambda)
            v = float(np.sign(v) * max(abs(v) - cfg.reg_alpha, 0.0))
            values[path] = v
        tree = _rebuild_with_values(skeleton, values)
        trees.append(tree)
        current += cfg.learning_rate * predict_tree(tree, x)

    return BoostModel(base_prediction=base, trees=tuple(trees), config=cfg, seed=seed)


def predict_boost(m: BoostModel, rows):
    """base + learning_rate * sum of tree outputs."""
    arr = np.asarray(rows, dtype=np.float64)
    single = arr.ndim == 1
    x = np.atleast_2d(arr)
    acc = np.full(x.shape[0], m.base_prediction)
    for tree in m.trees:
        acc += m.config.learning_rate * predict_tree(tree, x)
    return float(acc[0]) if single else acc


# -- serialization helpers -------------------------------------------------------

def tree_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"value": node.value}
    return {"feature": node.feature, "threshold": node.threshold,
            "left": tree_to_dict(node.left), "right": tree_to_dict(node.right)}


def tree_from_dict(doc: dict) -> TreeNode:
    if "value" in doc:
        return TreeNode(value=float(doc["value"]))
    return TreeNode(feature=int(doc["feature"]), threshold=float(doc["threshold"]),
                    left=tree_from_dict(doc["left"]), right=tree_from_dict(doc["right"]))
