"""Deep-forest cascade with out-of-fold class-vector augmentation.

Every level trains each learner with k-fold cross-validation.  A training
row's class vector comes from the one fold model that never saw it; unseen
rows get the average over all k fold models.  The next level sees the
original features followed by all class vectors of the previous level.
Growth stops once held-out accuracy stops improving, and the model is cut
back to its best level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .base_learners import (
    ForestModel,
    LearnerError,
    LogisticModel,
    train_forest,
    train_logistic,
)

N_CLASSES = 2
# Logistic step inside the cascade; 0.1 underfits the rare positive class
# within 500 epochs on wide pair inputs.
CASCADE_LR_RATE = 1.0


@dataclass(frozen=True)
class LearnerSpec:
    kind: str  # "random_forest" | "extra_trees" | "logistic"
    seed: int = 0
    n_trees: int = 50

    def to_dict(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, "n_trees": self.n_trees}


def cascade_learners(name: str = "default", seed: int = 0, n_trees: int = 50) -> tuple:
    """Learner sets by name: default (2 RF + ERT + LR), rf, ert, lr (4 of one kind)."""
    kinds = {
        "default": ("random_forest", "random_forest", "extra_trees", "logistic"),
        "rf": ("random_forest",) * 4,
        "ert": ("extra_trees",) * 4,
        "lr": ("logistic",) * 4,
    }
    if name not in kinds:
        raise ValueError(f"unknown cascade configuration {name!r}")
    return tuple(LearnerSpec(k, seed + 1000 * i, n_trees) for i, k in enumerate(kinds[name]))


@dataclass(frozen=True)
class CascadeConfig:
    learner_set: tuple = field(default_factory=cascade_learners)
    folds: int = 5
    max_levels: int = 20
    improvement_tolerance: float = 1e-3
    validation_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("folds must be at least 2")
        if not self.learner_set:
            raise ValueError("at least one learner is required")
        if self.max_levels < 1:
            raise ValueError("max_levels must be positive")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ValueError("validation_fraction must lie in (0, 1)")


def make_learner(spec: LearnerSpec, X, y, fold: int, level: int):
    """Train one fold model; seeds vary with level and fold."""
    seed = spec.seed + 7919 * level + 104729 * fold
    if spec.kind == "logistic":
        return train_logistic(X, y, learning_rate=CASCADE_LR_RATE)
    return train_forest(X, y, spec.kind, spec.n_trees, seed)


def learner_from_dict(d: dict):
    if d["type"] == "forest":
        return ForestModel.from_dict(d)
    if d["type"] == "logistic":
        return LogisticModel.from_dict(d)
    raise ValueError(f"unknown learner type {d['type']!r}")


@dataclass
class CascadeLevel:
    learners: List[LearnerSpec]
    fold_models: List[list]  # [learner][fold]
    input_dim: int

    @property
    def folds(self) -> int:
        return len(self.fold_models[0])

    def class_vectors(self, X: np.ndarray) -> np.ndarray:
        """Per-learner fold-averaged distributions, shape (n, learners, 2)."""
        out = np.empty((X.shape[0], len(self.fold_models), N_CLASSES))
        for li, models in enumerate(self.fold_models):
            acc = np.zeros((X.shape[0], N_CLASSES))
            for m in models:
                acc += m.predict_proba(X)
            out[:, li, :] = acc / len(models)
        return out


@dataclass
class CascadeModel:
    levels: List[CascadeLevel]
    input_dim: int
    validation_history: List[float]
    config: Optional[CascadeConfig] = None

    @property
    def stop_level(self) -> int:
        return len(self.levels)

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "validation_history": list(self.validation_history),
            "levels": [
                {
                    "input_dim": lv.input_dim,
                    "learners": [s.to_dict() for s in lv.learners],
                    "fold_models": [[m.to_dict() for m in models] for models in lv.fold_models],
                }
                for lv in self.levels
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CascadeModel":
        levels = [
            CascadeLevel(
                [LearnerSpec(**s) for s in lv["learners"]],
                [[learner_from_dict(m) for m in models] for models in lv["fold_models"]],
                int(lv["input_dim"]),
            )
            for lv in d["levels"]
        ]
        return cls(levels, int(d["input_dim"]), [float(v) for v in d["validation_history"]])


def stratified_split(y: np.ndarray, fraction: float, rng: np.random.Generator) -> tuple:
    """Indices (keep, held_out); each class contributes round(fraction * count) held-out rows."""
    held = []
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        k = int(round(fraction * idx.size))
        if idx.size >= 2:
            k = min(max(k, 1), idx.size - 1)
        else:
            k = 0
        held.append(idx[:k])
    held = np.sort(np.concatenate(held))
    keep = np.setdiff1d(np.arange(y.size), held)
    return keep, held


def stratified_folds(y: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Fold id per row; each class is dealt round-robin after a shuffle."""
    fold = np.empty(y.size, dtype=np.int64)
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        fold[idx] = np.arange(idx.size) % k
    return fold


def _augment(X_orig: np.ndarray, class_vecs: np.ndarray) -> np.ndarray:
    return np.hstack([X_orig, class_vecs.reshape(class_vecs.shape[0], -1)])


def _accuracy(proba: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(labels_from_proba(proba) == y))


def labels_from_proba(proba: np.ndarray) -> np.ndarray:
    # ties go to class 0
    return (proba[:, 1] > proba[:, 0]).astype(np.int64)


def train_cascade(X, y, config: CascadeConfig = CascadeConfig()) -> CascadeModel:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise LearnerError("X must be n x d and y of length n")
    if np.unique(y).size < 2:
        raise LearnerError("degenerate labels")
    n, d = X.shape
    if n < config.folds:
        raise LearnerError(f"need at least {config.folds} rows for {config.folds}-fold training")

    rng = np.random.default_rng(config.seed & 0xFFFFFFFF)
    fit_idx, val_idx = stratified_split(y, config.validation_fraction, rng)
    X_fit, y_fit = X[fit_idx], y[fit_idx]
    X_val, y_val = X[val_idx], y[val_idx]
    if np.unique(y_fit).size < 2:
        raise LearnerError("degenerate labels after the validation split")
    if np.min(np.bincount(y_fit, minlength=2)) < config.folds:
        raise LearnerError("too few rows of the minority class for the requested folds")

    levels: List[CascadeLevel] = []
    history: List[float] = []
    best = -np.inf
    in_fit, in_val = X_fit, X_val
    for level in range(config.max_levels):
        fold_of = stratified_folds(y_fit, config.folds, rng)
        n_learners = len(config.learner_set)
        oof = np.empty((X_fit.shape[0], n_learners, N_CLASSES))
        fold_models = []
        for li, spec in enumerate(config.learner_set):
            models = []
            for f in range(config.folds):
                tr = fold_of != f
                te = ~tr
                m = make_learner(spec, in_fit[tr], y_fit[tr], f, level)
                oof[te, li, :] = m.predict_proba(in_fit[te])
                models.append(m)
            fold_models.append(models)
        lv = CascadeLevel(list(config.learner_set), fold_models, in_fit.shape[1])
        val_vecs = lv.class_vectors(in_val) if X_val.shape[0] else np.empty((0, n_learners, N_CLASSES))
        acc = _accuracy(val_vecs.mean(axis=1), y_val) if X_val.shape[0] else _accuracy(oof.mean(axis=1), y_fit)
        levels.append(lv)
        history.append(acc)
        if acc > best + config.improvement_tolerance:
            best = acc
        else:
            break
        in_fit = _augment(X_fit, oof)
        in_val = _augment(X_val, val_vecs)

    keep = int(np.argmax(history)) + 1
    return CascadeModel(levels[:keep], d, history[:keep], config)


def predict_cascade(model: CascadeModel, X) -> tuple:
    """Replay the levels; returns (probabilities n x 2, labels)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise LearnerError(f"expected {model.input_dim} features, got {X.shape[-1]}")
    inputs = X
    vecs = None
    for i, lv in enumerate(model.levels):
        vecs = lv.class_vectors(inputs)
        if i + 1 < len(model.levels):
            inputs = _augment(X, vecs)
    proba = vecs.mean(axis=1)
    return proba, labels_from_proba(proba)
