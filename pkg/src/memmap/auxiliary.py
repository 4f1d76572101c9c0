"""Inducing-point selection (seeded k-means) and the width heuristic."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class KMeansConfig:
    M: int
    seed: int = 0
    max_iters: int = 100
    tol: float = 0.0

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 1:
            raise InvalidArgumentError(f"M must be a positive integer, got {self.M}")
        if self.max_iters < 1:
            raise InvalidArgumentError("max_iters must be at least 1")
        if self.tol < 0:
            raise InvalidArgumentError("tol must be nonnegative")


@dataclass
class KMeansResult:
    centroids: np.ndarray
    labels: np.ndarray
    inertia_trace: list
    n_iter: int
    converged: bool


def _sqdist(X, C):
    # explicit differences rather than the |x|^2 - 2x.c + |c|^2 expansion,
    # which loses exactness at zero distance
    d = X[:, None, :] - C[None, :, :]
    return np.einsum("ijk,ijk->ij", d, d)


def _kmeanspp(X, M, rng):
    N = X.shape[0]
    chosen = [int(rng.integers(N))]
    d2 = _sqdist(X, X[chosen])[:, 0]
    for _ in range(1, M):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(N, p=d2 / total))
        else:
            # every remaining point coincides with a chosen centroid
            free = np.setdiff1d(np.arange(N), chosen)
            idx = int(free[0])
        chosen.append(idx)
        d2 = np.minimum(d2, _sqdist(X, X[idx:idx + 1])[:, 0])
    return X[chosen].copy()


def kmeans(X, cfg: KMeansConfig) -> KMeansResult:
    """Lloyd's algorithm from k-means++ seeds.

    Stops when assignments stop changing, when the largest centroid shift
    is at most ``cfg.tol`` (if positive), or after ``cfg.max_iters``.
    Empty clusters are moved onto the point farthest from its centroid.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidArgumentError("X must be a 2-D array")
    N = X.shape[0]
    if cfg.M > N:
        raise InvalidArgumentError(f"M={cfg.M} exceeds the number of points N={N}")
    rng = np.random.default_rng(cfg.seed)
    C = _kmeanspp(X, cfg.M, rng)
    labels = None
    trace = []
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        D = _sqdist(X, C)
        new = np.argmin(D, axis=1)
        trace.append(float(D[np.arange(N), new].sum()))
        if labels is not None and np.array_equal(new, labels):
            converged = True
            break
        labels = new
        C_old = C
        C = np.empty_like(C_old)
        counts = np.bincount(labels, minlength=cfg.M)
        own = D[np.arange(N), labels].copy()
        for m in range(cfg.M):
            if counts[m]:
                C[m] = X[labels == m].mean(axis=0)
            else:
                far = int(np.argmax(own))
                C[m] = X[far]
                own[far] = -1.0
        if cfg.tol > 0 and np.max(np.abs(C - C_old)) <= cfg.tol:
            converged = True
            labels = np.argmin(_sqdist(X, C), axis=1)
            break
    return KMeansResult(C, labels, trace, it, converged)


def kmeans_centroids(X, cfg: KMeansConfig) -> np.ndarray:
    return kmeans(X, cfg).centroids


def width_heuristic(X) -> np.ndarray:
    """Per-feature widths ``1 / (max - min)^2``; constant features get 0."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise InvalidArgumentError("X must be a non-empty 2-D array")
    span = X.max(axis=0) - X.min(axis=0)
    w = np.zeros_like(span)
    sq = span * span
    # a span too small to square is treated like a constant feature
    nz = (sq > 0) & np.isfinite(sq) & (sq >= 1.0 / np.finfo(np.float64).max)
    w[nz] = 1.0 / sq[nz]
    return w
