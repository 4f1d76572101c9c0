"""Prediction with a fitted model: ``y_hat(x) = alpha^T G(x)^T``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .kernel_core import KernelConfig, compute_psi, feature_row_G
from .model import ModelParams


@dataclass(frozen=True)
class PredictionBatch:
    inputs: np.ndarray
    outputs: np.ndarray


def predict(x_star, model: ModelParams) -> np.ndarray:
    return feature_row_G(x_star, model) @ model.alpha


def predict_batch(X_star, model: ModelParams) -> np.ndarray:
    X_star = np.asarray(X_star, dtype=np.float64)
    if X_star.ndim == 1 and X_star.size == 0:
        X_star = X_star.reshape(0, model.n)
    if X_star.ndim != 2 or X_star.shape[1] != model.n:
        raise InvalidArgumentError(
            f"inputs must have {model.n} columns, got shape {X_star.shape}")
    if X_star.shape[0] == 0:
        return np.empty((0, model.p))
    cfg = KernelConfig(model.sigma2, model.sigma_x2, model.w)
    G = compute_psi(X_star, model.a, cfg)
    # row-by-row products keep each row bitwise equal to predict()
    return np.stack([G[q] @ model.alpha for q in range(G.shape[0])])


def predict_gradient(x_star, model: ModelParams) -> np.ndarray:
    """Jacobian ``d y_hat / d x`` of shape (p, n)."""
    x = np.asarray(x_star, dtype=np.float64).reshape(-1)
    G = feature_row_G(x, model)
    wt = model.w / (1.0 + model.w * model.sigma_x2)
    dG = G[:, None] * wt[None, :] * (model.a - x[None, :])   # (M, n)
    return model.alpha.T @ dG
