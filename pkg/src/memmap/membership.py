"""Student-t membership functions, their interpolation, and weighted averages.

A Student-t membership function on ``R^d`` is

    zeta(y) = (1 + (y - m)^T K^{-1} (y - m) / (nu - 2)) ** (-(nu + d) / 2)

which peaks at 1 for ``y = m`` and never vanishes. Normalized, it is the
multivariate t density with covariance ``K`` and ``nu`` degrees of freedom.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import linalg
from scipy.special import gammaln

from .errors import InvalidArgumentError, NumericError, UnsupportedError
from .kernel_core import JITTER, KernelConfig, add_jitter, gram_matrix, spd_factor

#: Quadrature nodes per axis, indexed by dimension.
QUAD_NODES = {1: 4096, 2: 4096, 3: 256}
#: Half-width of the default quadrature box in units of the largest std.
BOX_HALF_WIDTH = 50.0


def check_nu(nu) -> float:
    nu = float(nu)
    if not (np.isfinite(nu) and nu > 2):
        raise InvalidArgumentError(f"nu must exceed 2, got {nu}")
    return nu


def _cholesky_with_jitter(cov: np.ndarray, what: str) -> np.ndarray:
    try:
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError:
        scale = float(np.max(np.diag(cov))) if cov.size else 1.0
        return spd_factor(add_jitter(cov, JITTER * max(scale, 0.0)), what)[0]


@dataclass(frozen=True)
class StudentTMembership:
    mean: np.ndarray
    cov: np.ndarray
    nu: float
    _chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        cov = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        d = mean.shape[0]
        if cov.shape != (d, d):
            raise InvalidArgumentError(f"cov must be {d}x{d}, got {cov.shape}")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise InvalidArgumentError("mean and cov must be finite")
        if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-12 * max(1.0, np.abs(cov).max()):
            raise InvalidArgumentError("cov must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "nu", check_nu(self.nu))
        object.__setattr__(self, "_chol", _cholesky_with_jitter(cov, "membership covariance"))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def quad_form(self, Y) -> np.ndarray:
        """``(y - m)^T K^{-1} (y - m)`` for each row of ``Y``."""
        Y = np.asarray(Y, dtype=np.float64)
        single = Y.ndim == 1
        Y = Y.reshape(-1, self.dim) if not single else Y.reshape(1, -1)
        if Y.shape[1] != self.dim:
            raise InvalidArgumentError(f"points must have dimension {self.dim}")
        z = linalg.solve_triangular(self._chol, (Y - self.mean).T, lower=True)
        q = np.einsum("ij,ij->j", z, z)
        return q[0] if single else q

    def log_eval(self, Y):
        q = self.quad_form(Y)
        return -0.5 * (self.nu + self.dim) * np.log1p(q / (self.nu - 2.0))

    def __call__(self, Y):
        return np.exp(self.log_eval(Y))


def membership_eval(m: StudentTMembership, y) -> float:
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.shape[0] != m.dim:
        raise InvalidArgumentError(f"y must have length {m.dim}, got {y.shape[0]}")
    return float(np.exp(m.log_eval(y)))


def log_normalization_constant(m: StudentTMembership) -> float:
    d, nu = m.dim, m.nu
    logdet = 2.0 * np.sum(np.log(np.diag(m._chol)))
    return float(gammaln(nu / 2) - gammaln((nu + d) / 2)
                 + 0.5 * d * np.log(nu * np.pi)
                 + 0.5 * d * np.log((nu - 2) / nu)
                 + 0.5 * logdet)


def normalization_constant(m: StudentTMembership) -> float:
    """Integral of the membership function over ``R^d``.

    Dividing by this constant yields the multivariate t density whose scale
    matrix is ``(nu - 2) / nu * K``; the ``(nu - 2) / nu`` factor therefore
    enters with power ``d / 2``.
    """
    return float(np.exp(log_normalization_constant(m)))


@dataclass(frozen=True)
class ConditionalMembership:
    """Membership of mapping outputs ``f`` at ``x`` given outputs ``u`` at ``a``."""

    mean: np.ndarray
    base_scale: np.ndarray
    scale_multiplier: float
    nu_eff_exponent: float
    dof_shift: float
    u_quad: float = 0.0

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def conditional_membership(x_pts, a_pts, u, cfg: KernelConfig, nu) -> ConditionalMembership:
    """Interpolate from inducing outputs ``u`` to outputs at ``x_pts``.

    The joint Gram matrix of ``x_pts`` followed by ``a_pts`` gets
    ``1e-8 * sigma2`` added to its whole diagonal, so both ``K_xx`` and
    ``K_aa`` are jittered consistently.
    """
    nu = check_nu(nu)
    x_pts = np.atleast_2d(np.asarray(x_pts, dtype=np.float64))
    a_pts = np.atleast_2d(np.asarray(a_pts, dtype=np.float64))
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    M, N = a_pts.shape[0], x_pts.shape[0]
    if u.shape[0] != M:
        raise InvalidArgumentError(f"u must have length {M}, got {u.shape[0]}")
    K_aa = add_jitter(gram_matrix(a_pts, a_pts, cfg), cfg.jitter)
    K_xx = add_jitter(gram_matrix(x_pts, x_pts, cfg), cfg.jitter)
    K_xa = gram_matrix(x_pts, a_pts, cfg)
    fac = spd_factor(K_aa, "K_aa")
    L = fac[0] if fac[1] else fac[0].T
    # whitened cross-covariance: V = L^{-1} K_ax
    V = linalg.solve_triangular(L, K_xa.T, lower=True)
    zu = linalg.solve_triangular(L, u, lower=True)
    mean = V.T @ zu
    base = K_xx - V.T @ V
    base = 0.5 * (base + base.T)
    u_quad = float(zu @ zu)
    dof_shift = nu + M - 2.0
    return ConditionalMembership(
        mean=mean,
        base_scale=base,
        scale_multiplier=(nu + u_quad - 2.0) / dof_shift,
        nu_eff_exponent=(nu + M + N) / 2.0,
        dof_shift=dof_shift,
        u_quad=u_quad,
    )


def log_conditional_eval(c: ConditionalMembership, f_tilde) -> float:
    f_tilde = np.asarray(f_tilde, dtype=np.float64).reshape(-1)
    if f_tilde.shape[0] != c.dim:
        raise InvalidArgumentError(f"f_tilde must have length {c.dim}")
    try:
        L = linalg.cholesky(c.scale_multiplier * c.base_scale, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericError("conditional scale matrix is singular") from exc
    z = linalg.solve_triangular(L, f_tilde - c.mean, lower=True)
    return float(-c.nu_eff_exponent * np.log1p((z @ z) / c.dof_shift))


def conditional_eval(c: ConditionalMembership, f_tilde) -> float:
    return float(np.exp(log_conditional_eval(c, f_tilde)))


def default_box(m: StudentTMembership, half_width: float = BOX_HALF_WIDTH):
    r = half_width * np.sqrt(np.max(np.diag(m.cov)))
    return [(c - r, c + r) for c in m.mean]


def _trapezoid_weights(lo: float, hi: float, nodes: int):
    t = np.linspace(lo, hi, nodes)
    wts = np.full(nodes, (hi - lo) / (nodes - 1))
    wts[0] *= 0.5
    wts[-1] *= 0.5
    return t, wts


def grid_integrals(funcs: Sequence[Callable], box, nodes: int | None = None):
    """Tensor trapezoid integrals of several functions over one box.

    Each function maps a (P, d) array of points to (P,) values. Rows are
    processed in fixed-size chunks along the first axis and summed in
    order, so the result does not depend on memory limits.
    """
    d = len(box)
    if d < 1:
        raise InvalidArgumentError("box must have at least one axis")
    if d > 3:
        raise UnsupportedError(f"grid quadrature supports d <= 3, got {d}")
    nodes = nodes or QUAD_NODES[d]
    if nodes < 2:
        raise InvalidArgumentError("need at least 2 nodes per axis")
    axes = [_trapezoid_weights(lo, hi, nodes) for lo, hi in box]
    rest_pts = np.stack(np.meshgrid(*[t for t, _ in axes[1:]], indexing="ij"), -1).reshape(-1, d - 1) \
        if d > 1 else np.empty((1, 0))
    rest_w = np.ones(1)
    for _, wt in axes[1:]:
        rest_w = np.multiply.outer(rest_w, wt).reshape(-1)
    t0, w0 = axes[0]
    step = max(1, (1 << 20) // rest_pts.shape[0])
    totals = np.zeros(len(funcs))
    for s in range(0, nodes, step):
        head = t0[s:s + step]
        pts = np.concatenate(
            [np.repeat(head, rest_pts.shape[0])[:, None], np.tile(rest_pts, (head.shape[0], 1))], axis=1)
        wts = np.multiply.outer(w0[s:s + step], rest_w).reshape(-1)
        for i, f in enumerate(funcs):
            totals[i] += np.dot(wts, np.asarray(f(pts), dtype=np.float64).reshape(-1))
    return totals


def weighted_average(g: Callable, mu: Callable, box, nodes: int | None = None) -> float:
    """Average of ``g`` weighted by ``mu`` over a bounded box.

    ``(int g mu) / (int mu)`` by tensor trapezoid quadrature; ``box`` is a
    sequence of ``(lo, hi)`` pairs, one per dimension (at most 3).
    """
    num, den = grid_integrals(
        [lambda p: np.asarray(g(p), dtype=np.float64).reshape(-1) * mu(p), mu], box, nodes)
    if not (den > 0 and np.isfinite(den)):
        raise NumericError(f"weight function integrates to {den}")
    return float(num / den)
