# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: BLAS-backed matmuls plus fused elementwise loops.

Mirrors ``kdlab.kernels.py`` function for function; results agree with the
numpy backend to rounding.  All inputs are C-contiguous float64.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp as c_exp, log as c_log, tanh as c_tanh
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

BACKEND = "compiled"


cdef void _gemm(char ta, char tb, int m, int n, int k, double* a, int lda,
                double* b, int ldb, double* c, int ldc) nogil:
    cdef double alpha = 1.0, beta = 0.0
    dgemm(&ta, &tb, &m, &n, &k, &alpha, a, &lda, b, &ldb, &beta, c, &ldc)


def matmul(double[:, ::1] a, double[:, ::1] b):
    """a @ b.  Row-major C = A@B is computed as column-major C^T = B^T A^T."""
    cdef int m = a.shape[0], k = a.shape[1], n = b.shape[1]
    out = np.empty((m, n))
    cdef double[:, ::1] c = out
    if m and n and k:
        _gemm(b'N', b'N', n, m, k, &b[0, 0], n, &a[0, 0], k, &c[0, 0], n)
    return out


def matmul_tn(double[:, ::1] a, double[:, ::1] b):
    """a.T @ b for a (k, m) and b (k, n)."""
    cdef int k = a.shape[0], m = a.shape[1], n = b.shape[1]
    out = np.empty((m, n))
    cdef double[:, ::1] c = out
    if m and n and k:
        _gemm(b'N', b'T', n, m, k, &b[0, 0], n, &a[0, 0], m, &c[0, 0], n)
    return out


def matmul_nt(double[:, ::1] a, double[:, ::1] b):
    """a @ b.T for a (m, k) and b (n, k)."""
    cdef int m = a.shape[0], k = a.shape[1], n = b.shape[0]
    out = np.empty((m, n))
    cdef double[:, ::1] c = out
    if m and n and k:
        _gemm(b'T', b'N', n, m, k, &b[0, 0], k, &a[0, 0], k, &c[0, 0], n)
    return out


def bias_add(double[:, ::1] x, double[::1] b):
    cdef Py_ssize_t rows = x.shape[0], cols = x.shape[1], i, j
    out = np.empty((rows, cols))
    cdef double[:, ::1] y = out
    with nogil:
        for i in range(rows):
            for j in range(cols):
                y[i, j] = x[i, j] + b[j]
    return out


def bias_sum(double[:, ::1] dy):
    cdef Py_ssize_t rows = dy.shape[0], cols = dy.shape[1], i, j
    out = np.zeros(cols)
    cdef double[::1] s = out
    with nogil:
        for i in range(rows):
            for j in range(cols):
                s[j] += dy[i, j]
    return out


def relu(x):
    cdef double[::1] xv = x.reshape(-1)
    out = np.empty_like(x)
    cdef double[::1] yv = out.reshape(-1)
    cdef Py_ssize_t i, n = xv.shape[0]
    with nogil:
        for i in range(n):
            yv[i] = xv[i] if xv[i] > 0.0 else 0.0
    return out


def relu_grad(x, dy):
    cdef double[::1] xv = x.reshape(-1)
    cdef double[::1] gv = dy.reshape(-1)
    out = np.empty_like(x)
    cdef double[::1] yv = out.reshape(-1)
    cdef Py_ssize_t i, n = xv.shape[0]
    with nogil:
        for i in range(n):
            yv[i] = gv[i] if xv[i] > 0.0 else 0.0
    return out


def tanh(x):
    cdef double[::1] xv = x.reshape(-1)
    out = np.empty_like(x)
    cdef double[::1] yv = out.reshape(-1)
    cdef Py_ssize_t i, n = xv.shape[0]
    with nogil:
        for i in range(n):
            yv[i] = c_tanh(xv[i])
    return out


def tanh_grad(y, dy):
    cdef double[::1] yv = y.reshape(-1)
    cdef double[::1] gv = dy.reshape(-1)
    out = np.empty_like(y)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t i, n = yv.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = gv[i] * (1.0 - yv[i] * yv[i])
    return out


def row_sumsq(double[:, ::1] x):
    cdef Py_ssize_t rows = x.shape[0], cols = x.shape[1], i, j
    out = np.empty(rows)
    cdef double[::1] s = out
    cdef double acc
    with nogil:
        for i in range(rows):
            acc = 0.0
            for j in range(cols):
                acc += x[i, j] * x[i, j]
            s[i] = acc
    return out


def logsumexp_softmax_rows(double[:, ::1] x):
    """Row-wise (logsumexp, softmax), max-shifted like the numpy backend."""
    cdef Py_ssize_t rows = x.shape[0], cols = x.shape[1], i, j
    lse = np.empty(rows)
    softmax = np.empty((rows, cols))
    cdef double[::1] lv = lse
    cdef double[:, ::1] sv = softmax
    cdef double m, acc
    with nogil:
        for i in range(rows):
            m = x[i, 0]
            for j in range(1, cols):
                if x[i, j] > m:
                    m = x[i, j]
            acc = 0.0
            for j in range(cols):
                sv[i, j] = c_exp(x[i, j] - m)
                acc += sv[i, j]
            lv[i] = c_log(acc) + m
            for j in range(cols):
                sv[i, j] /= acc
    return lse, softmax
