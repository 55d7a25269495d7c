"""Weighted generalized CCA (Carroll's eigen-formulation).

The shared embedding ``G`` holds the top-k eigenvectors of

    M = sum_i w_i X_i (X_i'X_i + r_i I)^-1 X_i'

and each view map is the ridge regression ``U_i = (X_i'X_i + r_i I)^-1 X_i' G``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg

DEFAULT_WEIGHTS = (0.25, 0.5, 0.5, 0.25)
VIEW_ORDER = ("post", "follower", "friend", "profile")


class WGCCAError(ValueError):
    pass


@dataclass
class ViewMatrix:
    data: np.ndarray
    view_name: str = ""


@dataclass
class SharedEmbedding:
    G: np.ndarray
    eigenvalues: np.ndarray

    @property
    def latent_dim(self) -> int:
        return self.G.shape[1]


@dataclass
class ViewProjection:
    U: List[np.ndarray]
    ridge: List[float]
    means: List[np.ndarray] = field(default_factory=list)

    @property
    def latent_dim(self) -> int:
        return self.U[0].shape[1]

    def to_dict(self) -> dict:
        return {
            "U": [u.tolist() for u in self.U],
            "ridge": list(self.ridge),
            "means": [m.tolist() for m in self.means],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ViewProjection":
        return cls(
            [np.asarray(u, dtype=float) for u in d["U"]],
            [float(r) for r in d["ridge"]],
            [np.asarray(m, dtype=float) for m in d["means"]],
        )


def _as_array(v) -> np.ndarray:
    return np.asarray(v.data if isinstance(v, ViewMatrix) else v, dtype=float)


def _check_weights(weights, n_views: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (n_views,):
        raise WGCCAError(f"expected {n_views} view weights, got {w.size}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise WGCCAError("view weights must be finite and non-negative")
    if not np.any(w > 0):
        raise WGCCAError("view weights are all zero")
    return w


def default_ridge(X: np.ndarray) -> float:
    """1e-6 * trace(X'X) / d; views that are entirely zero get 1.0."""
    tr = float(np.einsum("ij,ij->", X, X))
    if tr == 0.0:
        return 1.0
    return 1e-6 * tr / X.shape[1]


def canonicalize_signs(V: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip each column so that its first non-negligible entry is positive."""
    V = V.copy()
    for j in range(V.shape[1]):
        col = V[:, j]
        nz = np.flatnonzero(np.abs(col) > tol)
        if nz.size and col[nz[0]] < 0:
            V[:, j] = -col
    return V


def _gram_solve(X: np.ndarray, ridge: float) -> np.ndarray:
    """(X'X + ridge I)^-1 X'  as a d x n matrix."""
    C = X.T @ X
    if ridge > 0:
        C = C + ridge * np.eye(C.shape[0])
    try:
        factor = scipy.linalg.cho_factor(C, lower=True, check_finite=False)
        return scipy.linalg.cho_solve(factor, X.T, check_finite=False)
    except np.linalg.LinAlgError:
        if ridge == 0:
            raise WGCCAError("singular Gram matrix X'X; use a positive ridge") from None
        raise


def wgcca_fit(views: Sequence, weights=DEFAULT_WEIGHTS, k: int = 64, ridge: Optional[float] = None,
              center: bool = True) -> tuple:
    """Fit the shared embedding and per-view maps.

    ``ridge`` of None applies :func:`default_ridge` per view; a number
    (including 0) is used for every view.  Returns
    ``(SharedEmbedding, ViewProjection)``.
    """
    mats = [_as_array(v) for v in views]
    if not mats:
        raise WGCCAError("no views")
    n = mats[0].shape[0]
    if any(m.ndim != 2 or m.shape[0] != n for m in mats):
        raise WGCCAError("views must be 2-d with the same number of rows")
    w = _check_weights(weights, len(mats))
    if not 1 <= k <= n:
        raise WGCCAError(f"latent dimension k={k} must lie in [1, n={n}]")

    means = [m.mean(axis=0) if center else np.zeros(m.shape[1]) for m in mats]
    mats = [m - mu for m, mu in zip(mats, means)]
    ridges = [default_ridge(m) if ridge is None else float(ridge) for m in mats]
    if any(r < 0 for r in ridges):
        raise WGCCAError("ridge must be non-negative")

    solves = []
    M = np.zeros((n, n))
    for X, r, wi in zip(mats, ridges, w):
        S = _gram_solve(X, r)
        solves.append(S)
        if wi > 0:
            M += wi * (X @ S)
    M = 0.5 * (M + M.T)
    evals, evecs = scipy.linalg.eigh(M, subset_by_index=[n - k, n - 1], driver="evr")
    order = np.argsort(-evals, kind="stable")
    evals = evals[order]
    G = canonicalize_signs(evecs[:, order])
    U = [S @ G for S in solves]
    return SharedEmbedding(G, evals), ViewProjection(U, ridges, means)


def wgcca_project(projection: ViewProjection, weights, x_new: Sequence) -> np.ndarray:
    """Weighted average of per-view latent estimates ``(x_i - mean_i) U_i``.

    ``x_new`` holds one vector (or a row-stacked matrix) per view.
    """
    w = _check_weights(weights, len(projection.U))
    if len(x_new) != len(projection.U):
        raise WGCCAError(f"expected {len(projection.U)} views, got {len(x_new)}")
    total = None
    for i, (x, U) in enumerate(zip(x_new, projection.U)):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != U.shape[0]:
            raise WGCCAError(f"view {i}: expected dimension {U.shape[0]}, got {x.shape[-1]}")
        mu = projection.means[i] if projection.means else 0.0
        part = w[i] * ((x - mu) @ U)
        total = part if total is None else total + part
    return total / w.sum()


def objective(views: Sequence, weights, G: np.ndarray, U: Sequence[np.ndarray]) -> float:
    """sum_i w_i ||G - X_i U_i||_F^2 on the given (already centered) views."""
    w = np.asarray(weights, dtype=float)
    return float(sum(wi * np.sum((G - _as_array(X) @ Ui) ** 2) for wi, X, Ui in zip(w, views, U)))


def view_reconstruction_residual(views: Sequence, weights, G: np.ndarray) -> float:
    """sum_i w_i ||X_i - G G' X_i||_F^2: how much of each view the span of G misses."""
    w = np.asarray(weights, dtype=float)
    total = 0.0
    for wi, X in zip(w, views):
        X = _as_array(X)
        total += wi * float(np.sum((X - G @ (G.T @ X)) ** 2))
    return total


def write_embeddings(ids: Sequence[str], G: np.ndarray, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, row in zip(ids, G):
            fh.write(i + "\t" + "\t".join(f"{v:.6g}" for v in row) + "\n")
