"""CART regression trees and the ensembles built on them.

Random Forest bags exhaustive-split trees over bootstrap resamples; Extremely
Randomized Trees grow random-threshold trees on the full sample; the generic
gradient-boosted model fits shallow exhaustive trees to running residuals.
All fits are deterministic per seed, with per-tree seeds spawned from the
master seed so results do not depend on execution order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TreeParams",
    "TreeNode",
    "EnsembleModel",
    "cart_fit",
    "tree_predict",
    "forest_fit",
    "gbdt_fit",
    "ensemble_predict",
]


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: float | int = 1
    max_features: str | float = "all"  # "all" | "sqrt" | fraction in (0, 1]
    split_mode: str = "exhaustive"  # "exhaustive" | "random-threshold"

    def __post_init__(self) -> None:
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if isinstance(self.min_samples_leaf, float) and not 0.0 < self.min_samples_leaf <= 0.5:
            if self.min_samples_leaf != int(self.min_samples_leaf) or self.min_samples_leaf < 1:
                raise ValueError("fractional min_samples_leaf must be in (0, 0.5]")
        if self.split_mode not in ("exhaustive", "random-threshold"):
            raise ValueError(f"unknown split_mode {self.split_mode!r}")

    def leaf_count(self, n: int) -> int:
        """Absolute minimum leaf size for a training set of n samples."""
        if isinstance(self.min_samples_leaf, float) and self.min_samples_leaf < 1:
            return max(1, math.ceil(self.min_samples_leaf * n))
        return max(1, int(self.min_samples_leaf))

    def n_features_per_split(self, d: int) -> int:
        if self.max_features == "all":
            return d
        if self.max_features == "sqrt":
            return max(1, int(math.sqrt(d)))
        frac = float(self.max_features)
        if not 0.0 < frac <= 1.0:
            raise ValueError("fractional max_features must be in (0, 1]")
        return max(1, int(frac * d))


@dataclass(frozen=True)
class TreeNode:
    value: float = 0.0
    feature_index: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"leaf_value": self.value}
        assert self.left is not None and self.right is not None
        return {
            "feature_index": self.feature_index,
            "threshold": self.threshold,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }


def _best_exhaustive(X: np.ndarray, y: np.ndarray, feats: np.ndarray, min_leaf: int):
    """Best (feature, threshold) minimizing weighted child SSE; None if no
    valid split.  Scans midpoints between consecutive distinct sorted values."""
    n = len(y)
    if n < 2 * min_leaf:
        return None
    Xf = X[:, feats]
    order = np.argsort(Xf, axis=0, kind="stable")
    xs = np.take_along_axis(Xf, order, axis=0)
    ys = y[order]
    csum = np.cumsum(ys, axis=0)
    total = csum[-1]
    sizes = np.arange(1, n, dtype=float)  # left child sizes for cut positions 1..n-1
    left = csum[:-1]
    right = total[None, :] - left
    with np.errstate(invalid="ignore"):
        score = left**2 / sizes[:, None] + right**2 / (n - sizes)[:, None]
    valid = xs[:-1] < xs[1:]
    if min_leaf > 1:
        valid = valid.copy()
        valid[: min_leaf - 1] = False
        valid[n - min_leaf :] = False
    score = np.where(valid, score, -np.inf)
    # feature-major flattening keeps tie-breaking deterministic
    flat = score.T.reshape(-1)
    best = int(np.argmax(flat))
    if not np.isfinite(flat[best]):
        return None
    fi, pos = divmod(best, n - 1)
    feature = int(feats[fi])
    threshold = 0.5 * (xs[pos, fi] + xs[pos + 1, fi])
    return feature, float(threshold)


def _best_random(X: np.ndarray, y: np.ndarray, feats: np.ndarray, min_leaf: int, rng):
    """One uniform threshold per candidate feature; keep the best-scoring one."""
    n = len(y)
    best_score = -np.inf
    best: tuple[int, float] | None = None
    for f in feats:
        col = X[:, f]
        lo, hi = float(col.min()), float(col.max())
        thr = float(rng.uniform(lo, hi))
        mask = col <= thr
        nl = int(mask.sum())
        if nl < min_leaf or n - nl < min_leaf:
            continue
        sl = float(y[mask].sum())
        sr = float(y.sum()) - sl
        score = sl**2 / nl + sr**2 / (n - nl)
        if score > best_score:
            best_score = score
            best = (int(f), thr)
    return best


def _grow(X: np.ndarray, y: np.ndarray, params: TreeParams, min_leaf: int, rng, depth: int):
    n, d = X.shape
    leaf = TreeNode(value=float(y.mean()))
    if (
        n < params.min_samples_split
        or n < 2 * min_leaf
        or (params.max_depth is not None and depth >= params.max_depth)
        or np.ptp(y) == 0.0
    ):
        return leaf

    k = params.n_features_per_split(d)
    feats = np.arange(d) if k == d else np.sort(rng.choice(d, size=k, replace=False))
    if params.split_mode == "exhaustive":
        split = _best_exhaustive(X, y, feats, min_leaf)
    else:
        split = _best_random(X, y, feats, min_leaf, rng)
    if split is None:
        return leaf
    feature, threshold = split
    mask = X[:, feature] <= threshold
    return TreeNode(
        value=float(y.mean()),
        feature_index=feature,
        threshold=threshold,
        left=_grow(X[mask], y[mask], params, min_leaf, rng, depth + 1),
        right=_grow(X[~mask], y[~mask], params, min_leaf, rng, depth + 1),
    )


def cart_fit(X: np.ndarray, y: np.ndarray, params: TreeParams, seed: int = 0) -> TreeNode:
    """Greedy squared-error regression tree."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("X must be a non-empty 2-D matrix")
    if y.shape != (len(X),):
        raise ValueError("y length must match X rows")
    rng = np.random.default_rng(seed)
    return _grow(X, y, params, params.leaf_count(len(X)), rng, depth=0)


def tree_predict(tree: TreeNode, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    out = np.empty(len(X))

    def walk(node: TreeNode, idx: np.ndarray) -> None:
        if node.is_leaf or len(idx) == 0:
            out[idx] = node.value
            return
        mask = X[idx, node.feature_index] <= node.threshold
        assert node.left is not None and node.right is not None
        walk(node.left, idx[mask])
        walk(node.right, idx[~mask])

    walk(tree, np.arange(len(X)))
    return out


@dataclass(frozen=True)
class EnsembleModel:
    family: str  # "random_forest" | "extra_trees" | "gbdt"
    trees: tuple[TreeNode, ...]
    bootstrap: bool
    seed: int
    hyperparams: dict = field(default_factory=dict)
    learning_rate: float = 0.0  # gbdt only
    base_prediction: float = 0.0  # gbdt only
    stage_losses: tuple[float, ...] = ()  # gbdt training MSE per stage
    n_features: int = 0

    def to_json(self, fingerprint: str = "") -> str:
        return json.dumps(
            {
                "family": self.family,
                "hyperparams": self.hyperparams,
                "bootstrap": self.bootstrap,
                "learning_rate": self.learning_rate,
                "base_prediction": self.base_prediction,
                "trees": [t.to_dict() for t in self.trees],
                "seed": self.seed,
                "trained_on": fingerprint,
            },
            sort_keys=True,
        )


def _tree_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(n)


def forest_fit(
    X: np.ndarray,
    y: np.ndarray,
    family: str,
    n_estimators: int,
    params: TreeParams,
    seed: int = 0,
    bootstrap: bool | None = None,
) -> EnsembleModel:
    """Random Forest (bootstrap + exhaustive splits) or Extremely Randomized
    Trees (full sample + random thresholds).  ``bootstrap`` is a test hook."""
    if n_estimators < 1:
        raise ValueError("n_estimators must be >= 1")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(X) < 2:
        raise ValueError("need at least 2 samples")

    if family == "random_forest":
        use_bootstrap = True if bootstrap is None else bootstrap
        params = TreeParams(
            max_depth=params.max_depth,
            min_samples_split=params.min_samples_split,
            min_samples_leaf=params.min_samples_leaf,
            max_features=params.max_features,
            split_mode="exhaustive",
        )
    elif family == "extra_trees":
        use_bootstrap = False if bootstrap is None else bootstrap
        params = TreeParams(
            max_depth=params.max_depth,
            min_samples_split=params.min_samples_split,
            min_samples_leaf=params.min_samples_leaf,
            max_features=params.max_features,
            split_mode="random-threshold",
        )
    else:
        raise ValueError(f"unknown forest family {family!r}")

    n = len(X)
    min_leaf = params.leaf_count(n)
    trees = []
    for ss in _tree_seeds(seed, n_estimators):
        rng = np.random.default_rng(ss)
        if use_bootstrap:
            idx = rng.integers(0, n, size=n)
            Xb, yb = X[idx], y[idx]
        else:
            Xb, yb = X, y
        trees.append(_grow(Xb, yb, params, min_leaf, rng, depth=0))
    return EnsembleModel(
        family=family,
        trees=tuple(trees),
        bootstrap=use_bootstrap,
        seed=seed,
        n_features=X.shape[1],
        hyperparams={
            "n_estimators": n_estimators,
            "max_depth": params.max_depth,
            "min_samples_split": params.min_samples_split,
            "min_samples_leaf": params.min_samples_leaf,
            "max_features": params.max_features,
        },
    )


def gbdt_fit(
    X: np.ndarray,
    y: np.ndarray,
    learning_rate: float,
    max_depth: int,
    n_estimators: int,
    seed: int = 0,
    min_samples_leaf: float | int = 1,
) -> EnsembleModel:
    """Gradient boosting on squared error: each stage fits an exhaustive tree
    to the current residuals; training loss is non-increasing per stage."""
    if not 0.0 < learning_rate <= 1.0:
        raise ValueError("learning_rate must be in (0, 1]")
    if n_estimators < 0:
        raise ValueError("n_estimators must be >= 0")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(X) < 2:
        raise ValueError("need at least 2 samples")

    params = TreeParams(
        max_depth=max_depth, min_samples_leaf=min_samples_leaf, split_mode="exhaustive"
    )
    base = float(y.mean())
    pred = np.full(len(y), base)
    trees = []
    losses = [float(np.mean((y - pred) ** 2))]
    for ss in _tree_seeds(seed, n_estimators):
        rng = np.random.default_rng(ss)
        resid = y - pred
        tree = _grow(X, resid, params, params.leaf_count(len(X)), rng, depth=0)
        pred = pred + learning_rate * tree_predict(tree, X)
        trees.append(tree)
        losses.append(float(np.mean((y - pred) ** 2)))
    return EnsembleModel(
        family="gbdt",
        trees=tuple(trees),
        bootstrap=False,
        seed=seed,
        n_features=X.shape[1],
        learning_rate=learning_rate,
        base_prediction=base,
        stage_losses=tuple(losses),
        hyperparams={
            "learning_rate": learning_rate,
            "max_depth": max_depth,
            "n_estimators": n_estimators,
            "min_samples_leaf": min_samples_leaf,
        },
    )


def ensemble_predict(m: EnsembleModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if m.n_features and X.shape[1] != m.n_features:
        raise ValueError(f"expected {m.n_features} features, got {X.shape[1]}")
    if m.family == "gbdt":
        out = np.full(len(X), m.base_prediction)
        for tree in m.trees:
            out += m.learning_rate * tree_predict(tree, X)
        return out
    if not m.trees:
        raise ValueError("empty forest")
    acc = np.zeros(len(X))
    for tree in m.trees:
        acc += tree_predict(tree, X)
    return acc / len(m.trees)
