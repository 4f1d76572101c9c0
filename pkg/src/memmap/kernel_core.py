"""Squared-exponential kernel and the design quantities used for learning.

The heavy loops (Gram matrices, ``Psi``, ``Phi``) live in a compiled
extension, ``memmap._kernels``. When it cannot be imported, or when the
environment variable ``MEMMAP_PURE_PYTHON`` is set, the numpy version in
``memmap._kernels_py`` is used instead. :data:`BACKEND` names the choice.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import InvalidArgumentError, NumericError

if os.environ.get("MEMMAP_PURE_PYTHON"):
    from . import _kernels_py as _backend
    BACKEND = "python"
else:
    try:
        from . import _kernels as _backend
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        from . import _kernels_py as _backend
        BACKEND = "python"

#: Relative diagonal jitter applied before factorizing ``K_aa``.
JITTER = 1e-8


@dataclass(frozen=True)
class KernelConfig:
    """Parameters of ``kr(x, y) = sigma2 * exp(-0.5 * sum_k w_k (x_k - y_k)^2)``.

    ``sigma_x2`` is the input-noise variance that smooths ``Psi``, ``Phi``
    and the prediction features; it does not enter :func:`eval_kernel`.
    """

    sigma2: float
    sigma_x2: float
    w: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(np.asarray(self.w, dtype=np.float64).reshape(-1))
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "sigma_x2", float(self.sigma_x2))
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise InvalidArgumentError(f"sigma2 must be positive, got {self.sigma2}")
        if not (np.isfinite(self.sigma_x2) and self.sigma_x2 >= 0):
            raise InvalidArgumentError(f"sigma_x2 must be nonnegative, got {self.sigma_x2}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InvalidArgumentError("widths w must be finite and nonnegative")

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @property
    def jitter(self) -> float:
        return JITTER * self.sigma2


@dataclass(frozen=True)
class DesignMatrices:
    K_aa: np.ndarray
    Psi: np.ndarray
    Phi: np.ndarray
    xi: float


def _points(A, cfg: KernelConfig, name: str) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim == 1:
        A = A.reshape(1, -1) if cfg.n != 1 or A.size == 1 else A.reshape(-1, 1)
    if A.ndim != 2 or A.shape[1] != cfg.n:
        raise InvalidArgumentError(
            f"{name} must have {cfg.n} columns, got shape {np.shape(A)}")
    return np.ascontiguousarray(A)


def eval_kernel(xi, xj, cfg: KernelConfig) -> float:
    xi = np.asarray(xi, dtype=np.float64).reshape(-1)
    xj = np.asarray(xj, dtype=np.float64).reshape(-1)
    if xi.shape[0] != cfg.n or xj.shape[0] != cfg.n:
        raise InvalidArgumentError(
            f"expected vectors of length {cfg.n}, got {xi.shape[0]} and {xj.shape[0]}")
    return float(_backend.gram(xi.reshape(1, -1), xj.reshape(1, -1), cfg.sigma2, cfg.w)[0, 0])


def gram_matrix(A, B, cfg: KernelConfig) -> np.ndarray:
    """Matrix of pairwise kernel values ``K[i, j] = kr(A[i], B[j])``."""
    return _backend.gram(_points(A, cfg, "A"), _points(B, cfg, "B"), cfg.sigma2, cfg.w)


def compute_xi(N: int, sigma2: float) -> float:
    if int(N) != N or N < 1:
        raise InvalidArgumentError(f"N must be a positive integer, got {N}")
    return N * float(sigma2)


def compute_psi(X, a, cfg: KernelConfig) -> np.ndarray:
    """Expected cross-features between data ``X`` (N, n) and inducing points ``a`` (M, n).

    ``Psi[i, m] = sigma2 / prod_k sqrt(1 + w_k sx2) * exp(-0.5 sum_k w_k (a_mk - x_ik)^2 / (1 + w_k sx2))``
    """
    return _backend.psi(_points(X, cfg, "X"), _points(a, cfg, "a"),
                        cfg.sigma2, cfg.sigma_x2, cfg.w)


def compute_phi(X, a, cfg: KernelConfig) -> np.ndarray:
    """Expected feature outer products, an (M, M) symmetric matrix.

    With ``sigma_x2 = 0`` this equals ``Psi.T @ Psi``.
    """
    return _backend.phi(_points(X, cfg, "X"), _points(a, cfg, "a"),
                        cfg.sigma2, cfg.sigma_x2, cfg.w)


def design_matrices(X, a, cfg: KernelConfig) -> DesignMatrices:
    X = _points(X, cfg, "X")
    a = _points(a, cfg, "a")
    return DesignMatrices(
        K_aa=gram_matrix(a, a, cfg),
        Psi=compute_psi(X, a, cfg),
        Phi=compute_phi(X, a, cfg),
        xi=compute_xi(X.shape[0], cfg.sigma2),
    )


def feature_row_G(x, model) -> np.ndarray:
    """Prediction features ``G(x)`` of shape (M,) for a fitted model.

    ``model`` needs ``a``, ``w``, ``sigma2`` and ``sigma_x2`` attributes.
    """
    cfg = KernelConfig(model.sigma2, model.sigma_x2, model.w)
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != cfg.n:
        raise InvalidArgumentError(f"x must have length {cfg.n}, got {x.shape[0]}")
    return compute_psi(x.reshape(1, -1), model.a, cfg)[0]


def add_jitter(K, amount: float) -> np.ndarray:
    K = np.array(K, dtype=np.float64, copy=True)
    K[np.diag_indices_from(K)] += amount
    return K


def spd_factor(A, what: str = "matrix"):
    """Lower Cholesky factor of a symmetric positive-definite matrix.

    Raises :class:`NumericError` carrying the smallest eigenvalue when the
    factorization fails.
    """
    try:
        return linalg.cho_factor(A, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        try:
            lam = float(np.linalg.eigvalsh(0.5 * (A + A.T)).min())
        except Exception:
            lam = float("nan")
        raise NumericError(
            f"{what} is not positive definite (min eigenvalue {lam:.3e}, "
            f"shape {np.shape(A)})") from exc


def spd_solve(factor, B) -> np.ndarray:
    return linalg.cho_solve(factor, B, check_finite=False)
