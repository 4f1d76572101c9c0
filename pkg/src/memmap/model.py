"""Value types shared by the learner, predictor and model store."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class Dataset:
    """Inputs ``X`` (N, n) paired with targets ``Y`` (N, p)."""

    X: np.ndarray
    Y: np.ndarray
    feature_names: Sequence[str] = field(default_factory=tuple)
    target_names: Sequence[str] = field(default_factory=tuple)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        Y = np.asarray(self.Y, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if Y.ndim == 1:
            Y = Y[:, None]
        if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
            raise InvalidArgumentError(
                f"X and Y must be 2-D with equal row counts, got {X.shape} and {Y.shape}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise InvalidArgumentError("dataset contains non-finite values")
        object.__setattr__(self, "X", np.ascontiguousarray(X))
        object.__setattr__(self, "Y", np.ascontiguousarray(Y))

    @property
    def N(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class ModelParams:
    """A fitted membership-mapping model.

    Attributes
    ----------
    alpha : (M, p) array
        Output weights; prediction is ``G(x) @ alpha``.
    w : (n,) array
        Per-feature kernel widths.
    a : (M, n) array
        Inducing points.
    sigma2, sigma_x2 : float
        Kernel variance and input-noise variance.
    nu : float
        Degrees of freedom, > 2.
    N : int
        Number of training rows.
    B : (M, N) array or None
        ``alpha = B @ Y``. Not needed for prediction.
    """

    alpha: np.ndarray
    w: np.ndarray
    a: np.ndarray
    sigma2: float
    sigma_x2: float
    nu: float
    N: int
    B: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("alpha", "w", "a", "B"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, np.ascontiguousarray(v, dtype=np.float64))
        if self.alpha.ndim == 1:
            object.__setattr__(self, "alpha", self.alpha[:, None].copy())
        self.validate()

    @property
    def n(self) -> int:
        return self.w.shape[0]

    @property
    def p(self) -> int:
        return self.alpha.shape[1]

    @property
    def M(self) -> int:
        return self.a.shape[0]

    def validate(self) -> None:
        if self.w.ndim != 1 or self.a.ndim != 2 or self.alpha.ndim != 2:
            raise InvalidArgumentError("w must be 1-D; a and alpha 2-D")
        if self.a.shape[1] != self.n:
            raise InvalidArgumentError(f"a has {self.a.shape[1]} columns, expected n={self.n}")
        if self.alpha.shape[0] != self.M:
            raise InvalidArgumentError(f"alpha has {self.alpha.shape[0]} rows, expected M={self.M}")
        if int(self.N) != self.N or self.N < self.M:
            raise InvalidArgumentError(f"N={self.N} must be an integer >= M={self.M}")
        if self.B is not None and self.B.shape != (self.M, self.N):
            raise InvalidArgumentError(f"B must be {self.M}x{self.N}, got {self.B.shape}")
        for name in ("alpha", "w", "a", "B"):
            v = getattr(self, name)
            if v is not None and not np.all(np.isfinite(v)):
                raise InvalidArgumentError(f"{name} contains non-finite values")
        if np.any(self.w < 0):
            raise InvalidArgumentError("w must be nonnegative")
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise InvalidArgumentError("sigma2 must be positive")
        if not (np.isfinite(self.sigma_x2) and self.sigma_x2 >= 0):
            raise InvalidArgumentError("sigma_x2 must be nonnegative")
        if not (np.isfinite(self.nu) and self.nu > 2):
            raise InvalidArgumentError(f"nu must exceed 2, got {self.nu}")
