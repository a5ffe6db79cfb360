"""Numpy implementations of the hot array kernels.

Every function here has a compiled twin in ``_fast.pyx`` with the same
signature and semantics; the package picks one implementation at import
time (see ``kdlab.kernels``).  All inputs are C-contiguous float64 arrays.
"""

import numpy as np

BACKEND = "python"


def matmul(a, b):
    """a @ b for 2-D operands."""
    return a @ b


def matmul_tn(a, b):
    """a.T @ b without materializing the transpose."""
    return a.T @ b


def matmul_nt(a, b):
    """a @ b.T without materializing the transpose."""
    return a @ b.T


def bias_add(x, b):
    """Row-broadcast add: x[i, :] + b."""
    return x + b


def bias_sum(dy):
    """Column sums, the gradient of bias_add w.r.t. the bias."""
    return dy.sum(axis=0)


def relu(x):
    return np.maximum(x, 0.0)


def relu_grad(x, dy):
    """Pass dy where x > 0; the subgradient at x == 0 is 0."""
    return np.where(x > 0.0, dy, 0.0)


def tanh(x):
    return np.tanh(x)


def tanh_grad(y, dy):
    """dy * (1 - y**2) with y = tanh(x)."""
    return dy * (1.0 - y * y)


def row_sumsq(x):
    """Per-row sum of squares of a 2-D array."""
    return (x * x).sum(axis=1)


def logsumexp_softmax_rows(x):
    """Row-wise (logsumexp, softmax) of a 2-D array, max-shifted for stability."""
    m = x.max(axis=1, keepdims=True)
    e = np.exp(x - m)
    s = e.sum(axis=1, keepdims=True)
    return (np.log(s) + m)[:, 0], e / s
