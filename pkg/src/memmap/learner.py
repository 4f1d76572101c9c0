"""Closed-form variational learning of Student-t membership-mappings.

Each output column ``y_j`` is modelled by its own zero-mean membership
mapping sharing the inducing points ``a``. One outer iteration updates the
expected inducing outputs, the expected residual energy ``E(O)``, then the
eight Gamma-style hyperposterior parameters, and monitors
``beta = (a_tau/b_tau) * (a_z/b_z)`` for convergence.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import linalg

from .auxiliary import KMeansConfig, kmeans_centroids, width_heuristic
from .errors import InvalidArgumentError, NumericError
from .kernel_core import (BACKEND, DesignMatrices, KernelConfig, add_jitter,
                          design_matrices, spd_factor, spd_solve)
from .model import Dataset, ModelParams

log = logging.getLogger(__name__)

#: Floor applied to E(O) before it enters the hyperposterior updates.
E_O_FLOOR = 1e-12

_EULER_GAMMA = 0.57721566490153286061
# Bernoulli terms B_2k / (2k) of the asymptotic digamma series, k = 1..8
_DIGAMMA_SERIES = (1 / 12, -1 / 120, 1 / 252, -1 / 240, 1 / 132,
                   -691 / 32760, 1 / 12, -3617 / 8160)


def digamma(x: float) -> float:
    """Digamma function for ``x > 0``.

    Shifts the argument up to ``x >= 6`` with ``psi(x) = psi(x + 1) - 1/x``
    and finishes with the asymptotic expansion.
    """
    x = float(x)
    if not (x > 0) or math.isinf(x):
        raise InvalidArgumentError(f"digamma requires a finite x > 0, got {x}")
    acc = 0.0
    while x < 6.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    for coef in reversed(_DIGAMMA_SERIES):
        series = series * inv2 + coef
    return acc + math.log(x) - 0.5 / x - series * inv2


@dataclass(frozen=True)
class HyperParams:
    """Fixed settings of the learning algorithm.

    ``M=None`` means ``min(N, 50)``.
    """

    M: Optional[int] = None
    nu: float = 5.0
    sigma2: float = 1.0
    sigma_x2: float = 0.01
    a_tau: float = 1.0
    b_tau: float = 1.0
    a_r: float = 1.0
    b_r: float = 1.0
    a_s: float = 1.0
    b_s: float = 1.0
    beta_rel_tol: float = 1e-6
    max_outer_iters: int = 1000
    min_outer_iters: int = 3
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.nu) and self.nu > 2):
            raise InvalidArgumentError(f"nu must exceed 2, got {self.nu}")
        if self.M is not None and (int(self.M) != self.M or self.M < 1):
            raise InvalidArgumentError(f"M must be a positive integer, got {self.M}")
        for name in ("a_tau", "b_tau", "a_r", "b_r", "a_s", "b_s", "sigma2", "beta_rel_tol"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidArgumentError(f"{name} must be positive, got {v}")
        if not (math.isfinite(self.sigma_x2) and self.sigma_x2 >= 0):
            raise InvalidArgumentError(f"sigma_x2 must be nonnegative, got {self.sigma_x2}")
        if self.max_outer_iters < 1 or self.min_outer_iters < 1:
            raise InvalidArgumentError("iteration limits must be positive")
        if self.seed < 0:
            raise InvalidArgumentError("seed must be nonnegative")


@dataclass(frozen=True)
class VariationalState:
    a_tau_hat: float = 1.0
    b_tau_hat: float = 1.0
    a_z_hat: float = 1.0
    b_z_hat: float = 1.0
    a_r_hat: float = 1.0
    b_r_hat: float = 1.0
    a_s_hat: float = 1.0
    b_s_hat: float = 1.0
    E_O: float = 0.0
    E_m_u: Optional[np.ndarray] = None
    beta: float = 1.0
    iter: int = 0

    HATTED = ("a_tau_hat", "b_tau_hat", "a_z_hat", "b_z_hat",
              "a_r_hat", "b_r_hat", "a_s_hat", "b_s_hat")

    def hatted(self) -> dict:
        return {k: getattr(self, k) for k in self.HATTED}

    @property
    def noise_ratio(self) -> float:
        """``(b_tau b_z) / (a_tau a_z)``, the inverse of ``beta``."""
        return (self.b_tau_hat * self.b_z_hat) / (self.a_tau_hat * self.a_z_hat)


@dataclass
class FitReport:
    beta_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    clamp_count: int = 0
    min_hatted_trace: list = field(default_factory=list)
    E_O_trace: list = field(default_factory=list)
    final_state: dict = field(default_factory=dict)
    M: int = 0
    N: int = 0
    backend: str = BACKEND
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def initial_state(hp: HyperParams) -> VariationalState:
    s = VariationalState()
    a_s = hp.a_s + s.a_r_hat / s.b_r_hat
    b_s = hp.b_s + (s.a_r_hat / s.b_r_hat) * (s.a_z_hat / s.b_z_hat)
    s = replace(s, a_s_hat=a_s, b_s_hat=b_s)
    return replace(s, beta=(s.a_tau_hat / s.b_tau_hat) * (s.a_z_hat / s.b_z_hat))


@dataclass(frozen=True)
class Whitened:
    """Design quantities expressed in the basis that whitens ``K_aa``.

    With ``K_aa = L L^T``: ``A = L^{-1} Phi L^{-T}`` and ``P = L^{-1} Psi^T``.
    The learning system ``Phi + lam K_aa`` becomes ``L (A + lam I) L^T``,
    whose middle factor stays well conditioned even when ``K_aa`` is not.
    """

    L: np.ndarray
    A: np.ndarray
    P: np.ndarray
    trace: float          # Tr(K_aa^{-1} Phi) = Tr(A)
    xi: float

    def coefficient(self, nu: float) -> float:
        """``(xi - Tr(K_aa^{-1} Phi)) / (nu + M - 2)``."""
        return (self.xi - self.trace) / (nu + self.L.shape[0] - 2.0)


def whiten(design: DesignMatrices, K_aa) -> Whitened:
    L = spd_factor(K_aa, "K_aa")[0]
    L = np.tril(L)
    half = linalg.solve_triangular(L, design.Phi, lower=True)
    A = linalg.solve_triangular(L, half.T, lower=True)
    A = 0.5 * (A + A.T)
    P = linalg.solve_triangular(L, design.Psi.T, lower=True)
    return Whitened(L=L, A=A, P=P, trace=float(np.trace(A)), xi=design.xi)


def system_matrix(design: DesignMatrices, K_aa, state: VariationalState, nu: float,
                  white: Whitened | None = None):
    """Factor the whitened system ``A + (c + noise_ratio) I``.

    Returns ``(factor, c)``; the unwhitened matrix is
    ``Phi + c K_aa + noise_ratio K_aa``, shared by all output columns.
    """
    if white is None:
        white = whiten(design, K_aa)
    c = white.coefficient(nu)
    S = white.A + (c + state.noise_ratio) * np.eye(white.A.shape[0])
    return spd_factor(S, "learning system matrix"), c


def update_mean_u(design: DesignMatrices, K_aa, state: VariationalState, Y, nu, M, N,
                  white: Whitened | None = None) -> np.ndarray:
    """Expected inducing outputs, one column per target."""
    if white is None:
        white = whiten(design, K_aa)
    Y = np.asarray(Y, dtype=np.float64).reshape(N, -1)
    S_fac, _ = system_matrix(design, K_aa, state, nu, white)
    return white.L @ spd_solve(S_fac, white.P @ Y)


def solve_alpha(design: DesignMatrices, K_aa, state: VariationalState, Y, nu,
                white: Whitened | None = None) -> np.ndarray:
    """``(Phi + c K_aa + noise_ratio K_aa)^{-1} Psi^T Y`` via the whitened factor."""
    if white is None:
        white = whiten(design, K_aa)
    Y = np.asarray(Y, dtype=np.float64).reshape(design.Psi.shape[0], -1)
    S_fac, _ = system_matrix(design, K_aa, state, nu, white)
    return linalg.solve_triangular(white.L, spd_solve(S_fac, white.P @ Y), lower=True, trans="T")


def _expected_O_raw(design: DesignMatrices, K_aa, E_m_u, Y, nu, M,
                    white: Whitened | None = None) -> float:
    if white is None:
        white = whiten(design, K_aa)
    Y = np.asarray(Y, dtype=np.float64).reshape(design.Psi.shape[0], -1)
    c = white.coefficient(nu)
    # z = L^{-1} E(m_u): K^{-1} m terms become plain inner products in z
    Z = linalg.solve_triangular(white.L, E_m_u, lower=True)
    PY = white.P @ Y
    total = 0.0
    for j in range(Y.shape[1]):
        z = Z[:, j]
        total += (Y[:, j] @ Y[:, j] - 2.0 * (z @ PY[:, j])
                  + z @ (white.A @ z) + c * (z @ z))
    return float(total)


def update_expected_O(design: DesignMatrices, K_aa, E_m_u, Y, nu, M,
                      white: Whitened | None = None) -> float:
    """Expected residual energy, floored at :data:`E_O_FLOOR`."""
    return max(_expected_O_raw(design, K_aa, E_m_u, Y, nu, M, white), E_O_FLOOR)


def update_hyperposteriors(state: VariationalState, E_O: float, hp: HyperParams,
                           N: int, p: int) -> VariationalState:
    """One sweep over the eight hyperposterior parameters, in place order.

    Each update sees the values produced earlier in the same sweep.
    """
    if not (E_O >= 0):
        raise NumericError(f"E(O) must be nonnegative, got {E_O}")
    a_z, b_z = state.a_z_hat, state.b_z_hat
    a_r, b_r = state.a_r_hat, state.b_r_hat
    a_s, b_s = state.a_s_hat, state.b_s_hat

    a_tau = hp.a_tau + 0.5 * N * p
    b_tau = hp.b_tau + a_z / (2.0 * b_z) * E_O
    a_z = 1.0 + 0.5 * N * p + a_r / b_r
    b_z = (a_r / b_r) * (a_s / b_s) + a_tau / (2.0 * b_tau) * E_O
    a_r = hp.a_r
    b_r = (hp.b_r + (a_s / b_s) * (a_z / b_z) - digamma(a_s) + math.log(b_s)
           - 1.0 - digamma(a_z) + math.log(b_z))
    a_s = hp.a_s + a_r / b_r
    b_s = hp.b_s + (a_r / b_r) * (a_z / b_z)

    new = replace(state, a_tau_hat=a_tau, b_tau_hat=b_tau, a_z_hat=a_z, b_z_hat=b_z,
                  a_r_hat=a_r, b_r_hat=b_r, a_s_hat=a_s, b_s_hat=b_s, E_O=E_O,
                  beta=(a_tau / b_tau) * (a_z / b_z), iter=state.iter + 1)
    bad = {k: v for k, v in new.hatted().items() if not (math.isfinite(v) and v > 0)}
    if bad:
        raise NumericError(f"hyperposterior positivity violated at iteration {new.iter}: {bad}")
    return new


def fit(data: Dataset, hp: HyperParams = HyperParams(), aux_override=None, w=None):
    """Learn a model from ``data``.

    Returns ``(ModelParams, FitReport)``. Failing to converge within
    ``hp.max_outer_iters`` is reported through ``FitReport.converged``,
    not raised.
    """
    if not isinstance(data, Dataset):
        data = Dataset(*data)
    X, Y = data.X, data.Y
    N, n = X.shape
    p = Y.shape[1]
    M = hp.M if hp.M is not None else min(N, 50)
    if aux_override is not None:
        a = np.ascontiguousarray(aux_override, dtype=np.float64)
        if a.ndim != 2 or a.shape[1] != n or not np.all(np.isfinite(a)):
            raise InvalidArgumentError(f"inducing points must be finite with {n} columns")
        M = a.shape[0]
    if M > N:
        raise InvalidArgumentError(f"M={M} exceeds N={N}")
    w = width_heuristic(X) if w is None else np.asarray(w, dtype=np.float64)
    if aux_override is None:
        a = kmeans_centroids(X, KMeansConfig(M=M, seed=hp.seed))
    cfg = KernelConfig(hp.sigma2, hp.sigma_x2, w)

    design = design_matrices(X, a, cfg)
    K_aa = add_jitter(design.K_aa, cfg.jitter)
    white = whiten(design, K_aa)

    report = FitReport(M=M, N=N)
    state = initial_state(hp)
    beta_prev = state.beta
    for t in range(1, hp.max_outer_iters + 1):
        E_m_u = update_mean_u(design, K_aa, state, Y, hp.nu, M, N, white)
        raw = _expected_O_raw(design, K_aa, E_m_u, Y, hp.nu, M, white)
        if raw < E_O_FLOOR:
            report.clamp_count += 1
        E_O = max(raw, E_O_FLOOR)
        state = update_hyperposteriors(replace(state, E_m_u=E_m_u), E_O, hp, N, p)
        report.beta_trace.append(state.beta)
        report.E_O_trace.append(E_O)
        report.min_hatted_trace.append(min(state.hatted().values()))
        rel = abs(state.beta - beta_prev) / beta_prev
        log.debug("iter %d beta=%.17g rel=%.3e E(O)=%.6g", t, state.beta, rel, E_O)
        beta_prev = state.beta
        if t >= hp.min_outer_iters and rel < hp.beta_rel_tol:
            report.converged = True
            break
    report.iterations = state.iter
    if not report.converged:
        log.info("beta did not converge within %d iterations", hp.max_outer_iters)

    S_fac, _ = system_matrix(design, K_aa, state, hp.nu, white)
    B = linalg.solve_triangular(white.L, spd_solve(S_fac, white.P), lower=True, trans="T")
    alpha = solve_alpha(design, K_aa, state, Y, hp.nu, white)
    report.final_state = {**state.hatted(), "E_O": state.E_O, "beta": state.beta}
    report.notes.append("predictions decay to zero far from the inducing points")
    model = ModelParams(alpha=alpha, w=w, a=a, sigma2=hp.sigma2, sigma_x2=hp.sigma_x2,
                        nu=hp.nu, N=N, B=B)
    return model, report
