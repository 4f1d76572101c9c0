"""Numpy implementation of the kernel loops.

Used when the compiled ``memmap._kernels`` extension is not importable or
when ``MEMMAP_PURE_PYTHON=1``. Accumulation over feature dimensions runs
in ascending order so results are reproducible.
"""
import numpy as np


def _weighted_sqdist(A, B, w):
    acc = np.zeros((A.shape[0], B.shape[0]))
    for k in range(A.shape[1]):
        d = A[:, k, None] - B[None, :, k]
        acc += w[k] * d * d
    return acc


def gram(A, B, sigma2, w):
    return sigma2 * np.exp(-0.5 * _weighted_sqdist(A, B, w))


def psi(X, a, sigma2, sigma_x2, w):
    denom = 1.0 + w * sigma_x2
    scale = sigma2
    for k in range(w.shape[0]):
        scale = scale / np.sqrt(denom[k])
    # (a - x)^2 == (x - a)^2 bitwise, so X-major layout is safe
    return scale * np.exp(-0.5 * _weighted_sqdist(X, a, w / denom))


def phi(X, a, sigma2, sigma_x2, w, chunk=4096):
    M, n = a.shape
    wt = w / (1.0 + 2.0 * w * sigma_x2)
    scale = sigma2 * sigma2
    for k in range(n):
        scale = scale / np.sqrt(1.0 + 2.0 * w[k] * sigma_x2)
    iu, ju = np.triu_indices(M)
    pair = np.zeros(iu.shape[0])
    for k in range(n):
        d = a[iu, k] - a[ju, k]
        pair += w[k] * d * d
    mid = 0.5 * (a[iu] + a[ju])
    total = np.zeros(iu.shape[0])
    for start in range(0, X.shape[0], chunk):
        acc = _weighted_sqdist(mid, X[start:start + chunk], wt)
        total += np.exp(-0.25 * pair[:, None] - acc).sum(axis=1)
    out = np.empty((M, M))
    out[iu, ju] = scale * total
    out[ju, iu] = scale * total
    return out
