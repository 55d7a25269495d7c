"""Binary base learners: CART trees, random forests, extra trees, logistic regression.

Trees are stored as flat node arrays (``feature``, ``threshold``, ``left``,
``right``, ``value``); ``feature == -1`` marks a leaf.  Split search and
prediction run in compiled kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List

import numpy as np
from numba import njit
from scipy.special import expit

FOREST_KINDS = ("random_forest", "extra_trees")
MAX_DEPTH = 25
MIN_SAMPLES_SPLIT = 2
_TIE_TOL = 1e-12


class LearnerError(ValueError):
    pass


def _check_xy(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise LearnerError("X must be n x d and y of length n")
    if not np.all(np.isfinite(X)):
        raise LearnerError("non-finite features")
    if not np.all((y == 0) | (y == 1)):
        raise LearnerError("labels must be 0/1")
    if np.unique(y).size < 2:
        raise LearnerError("degenerate labels")
    return X, y.astype(np.int64)


# --------------------------------------------------------------------------
# trees


@njit(cache=True)
def _node_minmax(X, idx):
    d = X.shape[1]
    lo = np.empty(d)
    hi = np.empty(d)
    for f in range(d):
        lo[f] = X[idx[0], f]
        hi[f] = X[idx[0], f]
    for r in range(1, idx.shape[0]):
        row = idx[r]
        for f in range(d):
            v = X[row, f]
            if v < lo[f]:
                lo[f] = v
            elif v > hi[f]:
                hi[f] = v
    return lo, hi


@njit(cache=True)
def _children_score(c0l, c1l, c0r, c1r):
    nl = c0l + c1l
    nr = c0r + c1r
    s = 0.0
    if nl > 0:
        s += 2.0 * c0l * c1l / nl
    if nr > 0:
        s += 2.0 * c0r * c1r / nr
    return s / (nl + nr)


@njit(cache=True)
def _best_split_exhaustive(X, y, idx, feats):
    """Lowest weighted child Gini over midpoints; ties keep the earlier candidate."""
    n = idx.shape[0]
    tot1 = 0
    for r in range(n):
        tot1 += y[idx[r]]
    tot0 = n - tot1
    best_f = -1
    best_t = 0.0
    best_s = np.inf
    vals = np.empty(n)
    labs = np.empty(n, dtype=np.int64)
    for fi in range(feats.shape[0]):
        f = feats[fi]
        for r in range(n):
            vals[r] = X[idx[r], f]
        order = np.argsort(vals, kind="mergesort")
        for r in range(n):
            labs[r] = y[idx[order[r]]]
        c1l = 0
        for r in range(n - 1):
            c1l += labs[r]
            a = vals[order[r]]
            b = vals[order[r + 1]]
            if a == b:
                continue
            nl = r + 1
            c0l = nl - c1l
            s = _children_score(c0l, c1l, tot0 - c0l, tot1 - c1l)
            if s < best_s - _TIE_TOL:
                t = a + (b - a) / 2.0
                if t >= b:
                    t = a
                best_s = s
                best_f = f
                best_t = t
    return best_f, best_t, best_s


@njit(cache=True)
def _best_split_random(X, y, idx, feats, thresholds):
    n = idx.shape[0]
    best_f = -1
    best_t = 0.0
    best_s = np.inf
    for fi in range(feats.shape[0]):
        f = feats[fi]
        t = thresholds[fi]
        c0l = 0
        c1l = 0
        c0r = 0
        c1r = 0
        for r in range(n):
            row = idx[r]
            if X[row, f] <= t:
                if y[row] == 1:
                    c1l += 1
                else:
                    c0l += 1
            else:
                if y[row] == 1:
                    c1r += 1
                else:
                    c0r += 1
        if c0l + c1l == 0 or c0r + c1r == 0:
            continue
        s = _children_score(c0l, c1l, c0r, c1r)
        if s < best_s - _TIE_TOL:
            best_s = s
            best_f = f
            best_t = t
    return best_f, best_t, best_s


@njit(cache=True)
def _tree_predict(feature, threshold, left, right, value, X):
    out = np.empty((X.shape[0], 2))
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r, 0] = value[node, 0]
        out[r, 1] = value[node, 1]
    return out


@dataclass
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def node_count(self) -> int:
        return self.feature.shape[0]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _tree_predict(self.feature, self.threshold, self.left, self.right, self.value, X)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        value = np.asarray(d["value"], dtype=np.float64).reshape(-1, 2)
        return cls(
            np.asarray(d["feature"], dtype=np.int64),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.int64),
            np.asarray(d["right"], dtype=np.int64),
            value,
        )


def max_features_for(d: int) -> int:
    return max(1, int(math.sqrt(d)))


def build_tree(X, y, rng, splitter="best", max_features=None, max_depth=MAX_DEPTH,
               min_samples_split=MIN_SAMPLES_SPLIT, sample=None) -> Tree:
    """Grow one Gini tree.

    ``splitter="best"`` scans every midpoint of each candidate feature;
    ``"random"`` draws one uniform threshold per candidate feature.  Candidate
    features are drawn from those not constant at the node.  ``sample`` holds
    row indices (possibly repeated, as for a bootstrap).
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    d = X.shape[1]
    k = d if max_features is None else min(d, max_features)
    root = np.arange(X.shape[0], dtype=np.int64) if sample is None else np.asarray(sample, dtype=np.int64)

    feature: List[int] = []
    threshold: List[float] = []
    left: List[int] = []
    right: List[int] = []
    value: List[tuple] = []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append((0.0, 0.0))
        return len(feature) - 1

    stack = [(new_node(), root, 0)]
    while stack:
        node, idx, depth = stack.pop()
        n = idx.shape[0]
        c1 = int(y[idx].sum())
        value[node] = ((n - c1) / n, c1 / n)
        if c1 == 0 or c1 == n or n < min_samples_split or depth >= max_depth:
            continue
        lo, hi = _node_minmax(X, idx)
        live = np.flatnonzero(hi > lo)
        if live.size == 0:
            continue
        if live.size > k:
            feats = np.sort(rng.choice(live, size=k, replace=False))
        else:
            feats = live
        if splitter == "best":
            f, t, _ = _best_split_exhaustive(X, y, idx, feats)
        else:
            u = rng.random(feats.size)
            thr = lo[feats] + u * (hi[feats] - lo[feats])
            f, t, _ = _best_split_random(X, y, idx, feats, thr)
        if f < 0:
            continue
        go_left = X[idx, f] <= t
        li, ri = idx[go_left], idx[~go_left]
        feature[node] = int(f)
        threshold[node] = float(t)
        lnode = new_node()
        rnode = new_node()
        left[node] = lnode
        right[node] = rnode
        # right pushed first so the left subtree is numbered first
        stack.append((rnode, ri, depth + 1))
        stack.append((lnode, li, depth + 1))

    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(value, dtype=np.float64).reshape(-1, 2),
    )


@dataclass
class ForestModel:
    kind: str
    n_trees: int
    seed: int
    n_features: int
    trees: list = field(default_factory=list)

    @property
    def max_features(self) -> int:
        return max_features_for(self.n_features)

    def predict_proba(self, X) -> np.ndarray:
        return predict_proba_forest(self, X)

    def to_dict(self) -> dict:
        return {
            "type": "forest",
            "kind": self.kind,
            "n_trees": self.n_trees,
            "seed": self.seed,
            "n_features": self.n_features,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        return cls(d["kind"], int(d["n_trees"]), int(d["seed"]), int(d["n_features"]),
                   [Tree.from_dict(t) for t in d["trees"]])


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    return np.random.default_rng([seed & 0xFFFFFFFF, tree_index])


def train_forest(X, y, kind="random_forest", n_trees=50, seed=0) -> ForestModel:
    if kind not in FOREST_KINDS:
        raise LearnerError(f"unknown forest kind {kind!r}")
    if n_trees < 1:
        raise LearnerError("n_trees must be positive")
    X, y = _check_xy(X, y)
    n, d = X.shape
    if n < 2:
        raise LearnerError("need at least 2 samples")
    model = ForestModel(kind, n_trees, seed, d)
    mf = max_features_for(d)
    for t in range(n_trees):
        rng = tree_rng(seed, t)
        if kind == "random_forest":
            sample = np.sort(rng.integers(0, n, size=n))
            tree = build_tree(X, y, rng, "best", mf, sample=sample)
        else:
            tree = build_tree(X, y, rng, "random", mf)
        model.trees.append(tree)
    return model


def predict_proba_forest(model: ForestModel, X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise LearnerError(f"expected {model.n_features} features, got {X.shape[-1]}")
    acc = np.zeros((X.shape[0], 2))
    for tree in model.trees:
        acc += tree.predict_proba(X)
    return acc / len(model.trees)


# --------------------------------------------------------------------------
# logistic regression


@dataclass
class LogisticModel:
    coefficients: np.ndarray
    intercept: float
    l2_penalty: float = 0.0
    losses: list = field(default_factory=list, repr=False)

    def predict_proba(self, X) -> np.ndarray:
        return predict_proba_logistic(self, X)

    def to_dict(self) -> dict:
        return {
            "type": "logistic",
            "coefficients": self.coefficients.tolist(),
            "intercept": self.intercept,
            "l2_penalty": self.l2_penalty,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticModel":
        return cls(np.asarray(d["coefficients"], dtype=float), float(d["intercept"]), float(d["l2_penalty"]))


def logistic_loss(w, b, X, y, l2_penalty) -> float:
    z = X @ w + b
    # log(1 + e^z) - y z, computed without overflow
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2_penalty * (w @ w))


def logistic_gradient(w, b, X, y, l2_penalty) -> tuple:
    r = expit(X @ w + b) - y
    n = X.shape[0]
    return X.T @ r / n + l2_penalty * w, float(r.sum() / n)


def train_logistic(X, y, l2_penalty=1e-4, epochs=500, learning_rate=0.1) -> LogisticModel:
    """Full-batch gradient descent with step ``learning_rate / sqrt(t)``.

    Descent runs on column-standardized inputs (coefficients are folded
    back to the original scale afterwards) with the intercept started at
    the class log-odds.  The step is capped at 1/L, L the Lipschitz
    constant of the gradient, so the training loss never increases.
    """
    X, y = _check_xy(X, y)
    yf = y.astype(float)
    n, d = X.shape
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    Z = (X - mu) / sd
    smax = np.linalg.norm(np.hstack([Z, np.ones((n, 1))]), 2)
    cap = 1.0 / (0.25 * smax * smax / n + l2_penalty)
    w = np.zeros(d)
    rate = float(yf.mean())
    b = math.log(rate / (1.0 - rate))
    losses = [logistic_loss(w, b, Z, yf, l2_penalty)]
    for t in range(1, epochs + 1):
        step = min(learning_rate / math.sqrt(t), cap)
        gw, gb = logistic_gradient(w, b, Z, yf, l2_penalty)
        w = w - step * gw
        b = b - step * gb
        losses.append(logistic_loss(w, b, Z, yf, l2_penalty))
    if not (np.all(np.isfinite(w)) and math.isfinite(b)):
        raise LearnerError("logistic regression diverged")
    coef = w / sd
    return LogisticModel(coef, float(b - coef @ mu), float(l2_penalty), losses)


def predict_proba_logistic(model: LogisticModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.coefficients.shape[0]:
        raise LearnerError(f"expected {model.coefficients.shape[0]} features, got {X.shape[-1]}")
    p1 = expit(X @ model.coefficients + model.intercept)
    out = np.empty((X.shape[0], 2))
    out[:, 1] = p1
    out[:, 0] = 1.0 - p1
    return out
