import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from memmap.errors import InvalidArgumentError
from memmap.kernel_core import (KernelConfig, compute_phi, compute_psi, compute_xi,
                                design_matrices, eval_kernel, feature_row_G, gram_matrix)
from memmap.model import ModelParams

coords = st.floats(-5, 5, allow_nan=False)


def cfg_of(n, sigma2=1.0, sigma_x2=0.0, w=None):
    return KernelConfig(sigma2, sigma_x2, np.ones(n) if w is None else w)


def test_kernel_at_same_point_is_sigma2():
    cfg = KernelConfig(2.5, 0.01, [0.3, 4.0])
    assert eval_kernel([1.0, -2.0], [1.0, -2.0], cfg) == 2.5


def test_kernel_zero_widths():
    cfg = KernelConfig(1.7, 0.0, [0.0, 0.0])
    assert eval_kernel([0.0, 0.0], [10.0, -3.0], cfg) == 1.7


def test_kernel_scalar_value():
    cfg = KernelConfig(1.0, 0.0, [2.0])
    assert eval_kernel([0.0], [1.0], cfg) == pytest.approx(0.36787944117144233, rel=1e-15)


def test_kernel_dimension_mismatch():
    with pytest.raises(InvalidArgumentError):
        eval_kernel([0.0, 1.0], [1.0], cfg_of(2))


@pytest.mark.parametrize("bad", [dict(sigma2=0.0), dict(sigma_x2=-1.0), dict(w=[-1.0])])
def test_config_rejects_invalid(bad):
    kw = dict(sigma2=1.0, sigma_x2=0.0, w=[1.0]) | bad
    with pytest.raises(InvalidArgumentError):
        KernelConfig(**kw)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, 3, elements=coords), arrays(np.float64, 3, elements=coords),
       arrays(np.float64, 3, elements=st.floats(0, 3)))
def test_kernel_symmetric_and_bounded(x, y, w):
    cfg = KernelConfig(1.3, 0.0, w)
    kxy, kyx = eval_kernel(x, y, cfg), eval_kernel(y, x, cfg)
    assert kxy == kyx
    assert 0 <= kxy <= 1.3
    if np.sum(w * (x - y) ** 2) > 1e-12:
        assert kxy < 1.3


def test_gram_single_point():
    cfg = KernelConfig(3.0, 0.0, [1.0, 1.0])
    np.testing.assert_array_equal(gram_matrix([[0.5, 0.5]], [[0.5, 0.5]], cfg), [[3.0]])


def test_gram_duplicate_rows_all_ones():
    A = np.array([[0.2, 0.7], [0.2, 0.7]])
    np.testing.assert_array_equal(gram_matrix(A, A, cfg_of(2)), np.ones((2, 2)))


def test_gram_entries_match_eval_kernel(rng):
    A, B = rng.normal(size=(4, 3)), rng.normal(size=(5, 3))
    cfg = KernelConfig(0.8, 0.0, [0.5, 1.0, 2.0])
    K = gram_matrix(A, B, cfg)
    for i in range(4):
        for j in range(5):
            assert K[i, j] == eval_kernel(A[i], B[j], cfg)


@pytest.mark.parametrize("seed", range(5))
def test_gram_psd(seed):
    r = np.random.default_rng(seed)
    A = r.uniform(0, 1, size=(64, 2))
    cfg = KernelConfig(2.0, 0.0, r.uniform(0.1, 10, 2))
    K = gram_matrix(A, A, cfg)
    np.testing.assert_array_equal(K, K.T)
    assert np.linalg.eigvalsh(K).min() >= -1e-10 * cfg.sigma2


def test_gram_psd_five_points(rng):
    A = rng.normal(size=(5, 2))
    assert np.linalg.eigvalsh(gram_matrix(A, A, cfg_of(2))).min() >= -1e-10


@pytest.mark.parametrize("N,s2,expected", [(1, 1.0, 1.0), (100, 2.0, 200.0), (200, 1.0, 200.0)])
def test_xi(N, s2, expected):
    assert compute_xi(N, s2) == expected


def test_xi_rejects_zero():
    with pytest.raises(InvalidArgumentError):
        compute_xi(0, 1.0)


def test_psi_reduces_to_gram(rng):
    X, a = rng.uniform(size=(30, 3)), rng.uniform(size=(7, 3))
    cfg = KernelConfig(1.4, 0.0, [1.0, 3.0, 0.2])
    np.testing.assert_allclose(compute_psi(X, a, cfg), gram_matrix(X, a, cfg), rtol=0, atol=1e-12)


def test_psi_coincident_point():
    cfg = KernelConfig(1.0, 0.0, [5.0])
    assert compute_psi([[0.3]], [[0.3]], cfg)[0, 0] == 1.0


def test_psi_input_noise_scalar():
    cfg = KernelConfig(1.0, 0.01, [1.0])
    assert compute_psi([[0.3]], [[0.3]], cfg)[0, 0] == pytest.approx(0.99503719020998914, rel=1e-15)


def test_psi_matches_formula(rng):
    X, a = rng.normal(size=(6, 2)), rng.normal(size=(3, 2))
    w, s2, sx2 = np.array([0.7, 2.0]), 1.5, 0.05
    Psi = compute_psi(X, a, KernelConfig(s2, sx2, w))
    den = 1 + w * sx2
    for i in range(6):
        for m in range(3):
            ref = s2 / math.prod(np.sqrt(den)) * math.exp(-0.5 * np.sum(w * (a[m] - X[i]) ** 2 / den))
            assert Psi[i, m] == pytest.approx(ref, rel=1e-14)


def test_phi_reduces_to_psi_product(rng):
    X, a = rng.uniform(size=(25, 2)), rng.uniform(size=(6, 2))
    cfg = KernelConfig(1.2, 0.0, [3.0, 0.5])
    Psi = compute_psi(X, a, cfg)
    brute = np.array([[sum(Psi[i, m] * Psi[i, k] for i in range(25)) for k in range(6)] for m in range(6)])
    Phi = compute_phi(X, a, cfg)
    assert np.linalg.norm(Phi - brute) / np.linalg.norm(Phi) <= 1e-10


def test_phi_trivial_case():
    cfg = KernelConfig(1.0, 0.0, [1.0])
    np.testing.assert_array_equal(compute_phi([[0.4]], [[0.4]], cfg), [[1.0]])


def test_phi_symmetric_and_positive(rng):
    X, a = rng.normal(size=(40, 3)), rng.normal(size=(8, 3))
    Phi = compute_phi(X, a, KernelConfig(0.9, 0.02, [1.0, 0.1, 4.0]))
    assert np.max(np.abs(Phi - Phi.T)) <= 1e-12
    assert np.all(Phi > 0) and np.all(np.isfinite(Phi))


def test_phi_matches_input_noise_expectation(rng):
    # Phi is E[psi(x+e) psi(x+e)^T] with e ~ N(0, sigma_x2); check by Gauss-Hermite in 1-D
    X, a = rng.uniform(size=(5, 1)), rng.uniform(size=(3, 1))
    s2, sx2, w = 1.1, 0.04, np.array([2.5])
    t, wt = np.polynomial.hermite_e.hermegauss(80)
    wt = wt / wt.sum()
    ref = np.zeros((3, 3))
    for xi in X[:, 0]:
        pts = xi + np.sqrt(sx2) * t
        k = s2 * np.exp(-0.5 * w[0] * (pts[:, None] - a[None, :, 0]) ** 2)
        ref += (k * wt[:, None]).T @ k
    np.testing.assert_allclose(compute_phi(X, a, KernelConfig(s2, sx2, w)), ref, rtol=1e-12)


def test_psi_matches_input_noise_expectation(rng):
    X, a = rng.uniform(size=(5, 1)), rng.uniform(size=(3, 1))
    s2, sx2, w = 0.7, 0.03, np.array([4.0])
    t, wt = np.polynomial.hermite_e.hermegauss(80)
    wt = wt / wt.sum()
    ref = np.array([[wt @ (s2 * np.exp(-0.5 * w[0] * (xi + np.sqrt(sx2) * t - am) ** 2))
                     for am in a[:, 0]] for xi in X[:, 0]])
    np.testing.assert_allclose(compute_psi(X, a, KernelConfig(s2, sx2, w)), ref, rtol=1e-12)


def test_design_dimension_mismatch():
    with pytest.raises(InvalidArgumentError):
        compute_psi(np.zeros((3, 2)), np.zeros((2, 3)), cfg_of(2))
    with pytest.raises(InvalidArgumentError):
        compute_phi(np.zeros((3, 3)), np.zeros((2, 3)), cfg_of(2))


def test_design_matrices_bundle(rng):
    X, a = rng.uniform(size=(10, 2)), rng.uniform(size=(4, 2))
    cfg = KernelConfig(1.0, 0.01, [1.0, 1.0])
    d = design_matrices(X, a, cfg)
    assert d.xi == 10.0
    assert d.K_aa.shape == (4, 4) and d.Psi.shape == (10, 4) and d.Phi.shape == (4, 4)
    assert np.max(np.abs(d.K_aa - d.K_aa.T)) <= 1e-12


def _model(a, w, sigma2=1.0, sigma_x2=0.01):
    a = np.atleast_2d(a)
    return ModelParams(alpha=np.zeros((a.shape[0], 1)), w=w, a=a, sigma2=sigma2,
                       sigma_x2=sigma_x2, nu=5.0, N=a.shape[0])


def test_feature_row_at_inducing_point():
    m = _model([[0.1, 0.2], [0.9, 0.4]], [1.0, 2.0], sigma_x2=0.0)
    assert feature_row_G([0.9, 0.4], m)[1] == 1.0


def test_feature_row_equals_psi_row(rng):
    a = rng.normal(size=(6, 3))
    m = _model(a, [0.5, 1.0, 2.0])
    x = rng.normal(size=3)
    G = feature_row_G(x, m)
    row = compute_psi(x[None, :], a, KernelConfig(1.0, 0.01, m.w))[0]
    np.testing.assert_allclose(G, row, rtol=0, atol=1e-15)


def test_feature_row_zero_widths(rng):
    m = _model(rng.normal(size=(4, 2)), [0.0, 0.0])
    np.testing.assert_array_equal(feature_row_G([3.0, -1.0], m), np.ones(4))


def test_feature_row_dimension_mismatch():
    with pytest.raises(InvalidArgumentError):
        feature_row_G([1.0], _model([[0.0, 0.0]], [1.0, 1.0]))
