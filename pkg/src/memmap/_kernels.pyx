# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled loops for the squared-exponential design quantities.

Same signatures and summation order (feature index ascending) as
:mod:`memmap._kernels_py`.
"""
import numpy as np
from libc.math cimport exp, sqrt


def gram(const double[:, ::1] A, const double[:, ::1] B, double sigma2,
         const double[::1] w):
    cdef Py_ssize_t m1 = A.shape[0], m2 = B.shape[0], n = A.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, d
    out = np.empty((m1, m2), dtype=np.float64)
    cdef double[:, ::1] K = out
    for i in range(m1):
        for j in range(m2):
            acc = 0.0
            for k in range(n):
                d = A[i, k] - B[j, k]
                acc = acc + w[k] * d * d
            K[i, j] = sigma2 * exp(-0.5 * acc)
    return out


def psi(const double[:, ::1] X, const double[:, ::1] a, double sigma2,
        double sigma_x2, const double[::1] w):
    cdef Py_ssize_t N = X.shape[0], M = a.shape[0], n = X.shape[1]
    cdef Py_ssize_t i, m, k
    cdef double acc, d, scale = sigma2
    wt_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] wt = wt_arr
    for k in range(n):
        scale = scale / sqrt(1.0 + w[k] * sigma_x2)
        wt[k] = w[k] / (1.0 + w[k] * sigma_x2)
    out = np.empty((N, M), dtype=np.float64)
    cdef double[:, ::1] P = out
    for i in range(N):
        for m in range(M):
            acc = 0.0
            for k in range(n):
                d = a[m, k] - X[i, k]
                acc = acc + wt[k] * d * d
            P[i, m] = scale * exp(-0.5 * acc)
    return out


def phi(const double[:, ::1] X, const double[:, ::1] a, double sigma2,
        double sigma_x2, const double[::1] w):
    cdef Py_ssize_t N = X.shape[0], M = a.shape[0], n = X.shape[1]
    cdef Py_ssize_t i, m, mp, k
    cdef double pair, acc, s, d, c
    cdef double scale = sigma2 * sigma2
    wt_arr = np.empty(n, dtype=np.float64)
    mid_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] wt = wt_arr
    cdef double[::1] mid = mid_arr
    for k in range(n):
        scale = scale / sqrt(1.0 + 2.0 * w[k] * sigma_x2)
        wt[k] = w[k] / (1.0 + 2.0 * w[k] * sigma_x2)
    out = np.empty((M, M), dtype=np.float64)
    cdef double[:, ::1] F = out
    for m in range(M):
        for mp in range(m, M):
            pair = 0.0
            for k in range(n):
                d = a[m, k] - a[mp, k]
                pair = pair + w[k] * d * d
                mid[k] = 0.5 * (a[m, k] + a[mp, k])
            s = 0.0
            for i in range(N):
                acc = 0.0
                for k in range(n):
                    c = mid[k] - X[i, k]
                    acc = acc + wt[k] * c * c
                s = s + exp(-0.25 * pair - acc)
            F[m, mp] = scale * s
            F[mp, m] = scale * s
    return out
