"""Minimal reverse-mode automatic differentiation over dense float64 tensors.

A ``Graph`` is a tape: every operation appends one record, and the backward
pass replays the records in exact reverse insertion order.  Gradients
accumulate additively into ``Tensor.grad``; callers zero grads between
optimizer steps.  Values are float64 throughout.
"""

from __future__ import annotations

import numpy as np

from . import kernels as K


class ShapeError(ValueError):
    """Raised when operands have non-conformable shapes."""


def _asarray(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    # ascontiguousarray would promote 0-d scalars to 1-d
    return arr if arr.ndim == 0 else np.ascontiguousarray(arr)


class Tensor:
    """A value node: float64 data plus a same-shape gradient buffer.

    ``requires_grad`` marks trainable leaves (parameters).  Constants such
    as teacher logits keep it False and never receive gradient.
    """

    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = _asarray(data)
        self.grad = np.zeros_like(self.data)
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad[...] = 0.0

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _require_2d(name, t: Tensor):
    if t.data.ndim != 2:
        raise ShapeError(f"{name} expects a 2-D tensor, got shape {t.data.shape}")


class Graph:
    """Append-only operation tape.

    Single-threaded per instance; independent graphs are independent.  The
    forward value of each op is computed eagerly; its backward rule is a
    closure stored on the tape.
    """

    def __init__(self):
        self._tape = []          # (out_tensor, backward_closure)
        self._produced = set()   # id() of tensors created by ops on this tape

    # -- plumbing ----------------------------------------------------------

    def _emit(self, out: Tensor, backward) -> Tensor:
        self._tape.append((out, backward))
        self._produced.add(id(out))
        return out

    def _flows(self, t: Tensor) -> bool:
        """Whether gradient should propagate into ``t``."""
        return t.requires_grad or id(t) in self._produced

    def backward(self, root: Tensor):
        """Accumulate d(root)/d(leaf) into every reachable leaf's grad.

        ``root`` must be a scalar produced by this graph.  Repeated calls
        without zeroing leaf grads accumulate.
        """
        if id(root) not in self._produced:
            raise ValueError("backward root was not produced by this graph")
        if root.data.ndim != 0:
            raise ShapeError(f"backward root must be scalar, got shape {root.data.shape}")
        for out, _ in self._tape:
            out.grad[...] = 0.0
        root.grad[...] = 1.0
        for _, bwd in reversed(self._tape):
            bwd()

    # -- primitive ops ------------------------------------------------------

    def constant(self, data) -> Tensor:
        """A leaf wrapped for convenience; never receives gradient."""
        return data if isinstance(data, Tensor) else Tensor(data)

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        _require_2d("matmul lhs", a)
        _require_2d("matmul rhs", b)
        if a.data.shape[1] != b.data.shape[0]:
            raise ShapeError(f"matmul: inner dims differ ({a.data.shape} @ {b.data.shape})")
        out = Tensor(K.matmul(a.data, b.data))

        def bwd():
            if self._flows(a):
                a.grad += K.matmul_nt(out.grad, b.data)
            if self._flows(b):
                b.grad += K.matmul_tn(a.data, out.grad)

        return self._emit(out, bwd)

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        """Elementwise add; also supports broadcasting a 1-D bias over rows."""
        if a.data.shape == b.data.shape:
            out = Tensor(a.data + b.data)

            def bwd():
                if self._flows(a):
                    a.grad += out.grad
                if self._flows(b):
                    b.grad += out.grad

        elif a.data.ndim == 2 and b.data.shape == (a.data.shape[1],):
            out = Tensor(K.bias_add(a.data, b.data))

            def bwd():
                if self._flows(a):
                    a.grad += out.grad
                if self._flows(b):
                    b.grad += K.bias_sum(out.grad)

        else:
            raise ShapeError(f"add: shapes {a.data.shape} and {b.data.shape} not conformable")
        return self._emit(out, bwd)

    def sub(self, a: Tensor, b: Tensor) -> Tensor:
        if a.data.shape != b.data.shape:
            raise ShapeError(f"sub: shapes {a.data.shape} and {b.data.shape} differ")
        out = Tensor(a.data - b.data)

        def bwd():
            if self._flows(a):
                a.grad += out.grad
            if self._flows(b):
                b.grad -= out.grad

        return self._emit(out, bwd)

    def mul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.data.shape != b.data.shape:
            raise ShapeError(f"mul: shapes {a.data.shape} and {b.data.shape} differ")
        out = Tensor(a.data * b.data)

        def bwd():
            if self._flows(a):
                a.grad += b.data * out.grad
            if self._flows(b):
                b.grad += a.data * out.grad

        return self._emit(out, bwd)

    def scale(self, a: Tensor, c: float) -> Tensor:
        c = float(c)
        out = Tensor(a.data * c)

        def bwd():
            if self._flows(a):
                a.grad += c * out.grad

        return self._emit(out, bwd)

    def add_scalar(self, a: Tensor, c: float) -> Tensor:
        out = Tensor(a.data + float(c))

        def bwd():
            if self._flows(a):
                a.grad += out.grad

        return self._emit(out, bwd)

    def relu(self, a: Tensor) -> Tensor:
        out = Tensor(K.relu(a.data))

        def bwd():
            if self._flows(a):
                a.grad += K.relu_grad(a.data, out.grad)

        return self._emit(out, bwd)

    def tanh(self, a: Tensor) -> Tensor:
        out = Tensor(K.tanh(a.data))

        def bwd():
            if self._flows(a):
                a.grad += K.tanh_grad(out.data, out.grad)

        return self._emit(out, bwd)

    def sum_sq(self, a: Tensor, axis: int | None = None) -> Tensor:
        """Sum of squared entries: scalar for axis=None, per-row for axis=1."""
        if axis is None:
            out = Tensor((a.data * a.data).sum())

            def bwd():
                if self._flows(a):
                    a.grad += (2.0 * out.grad[()]) * a.data

        elif axis == 1:
            _require_2d("sum_sq", a)
            out = Tensor(K.row_sumsq(a.data))

            def bwd():
                if self._flows(a):
                    a.grad += 2.0 * a.data * out.grad[:, None]

        else:
            raise ValueError(f"sum_sq supports axis None or 1, got {axis}")
        return self._emit(out, bwd)

    def sum(self, a: Tensor, axis: int | None = None) -> Tensor:
        if axis is None:
            out = Tensor(a.data.sum())

            def bwd():
                if self._flows(a):
                    a.grad += out.grad[()]

        elif axis == 1:
            _require_2d("sum", a)
            out = Tensor(a.data.sum(axis=1))

            def bwd():
                if self._flows(a):
                    a.grad += out.grad[:, None]

        else:
            raise ValueError(f"sum supports axis None or 1, got {axis}")
        return self._emit(out, bwd)

    def mean(self, a: Tensor) -> Tensor:
        n = a.data.size
        out = Tensor(a.data.sum() / n)

        def bwd():
            if self._flows(a):
                a.grad += out.grad[()] / n

        return self._emit(out, bwd)

    def log_sum_exp(self, a: Tensor, axis: int = 1) -> Tensor:
        """Row-wise log-sum-exp of a 2-D tensor (numerically stable)."""
        if axis != 1:
            raise ValueError(f"log_sum_exp supports axis=1 only, got {axis}")
        _require_2d("log_sum_exp", a)
        lse, softmax = K.logsumexp_softmax_rows(a.data)
        out = Tensor(lse)

        def bwd():
            if self._flows(a):
                a.grad += softmax * out.grad[:, None]

        return self._emit(out, bwd)

    def pick(self, a: Tensor, indices) -> Tensor:
        """out[j] = a[j, indices[j]] for a 2-D tensor and integer labels."""
        _require_2d("pick", a)
        idx = np.asarray(indices, dtype=np.int64)
        if idx.ndim != 1 or idx.shape[0] != a.data.shape[0]:
            raise ShapeError(f"pick: need {a.data.shape[0]} indices, got shape {idx.shape}")
        if idx.min(initial=0) < 0 or idx.max(initial=-1) >= a.data.shape[1]:
            raise IndexError(f"pick: index out of range for width {a.data.shape[1]}")
        rows = np.arange(a.data.shape[0])
        out = Tensor(a.data[rows, idx])

        def bwd():
            if self._flows(a):
                np.add.at(a.grad, (rows, idx), out.grad)

        return self._emit(out, bwd)


def grad_check(loss_fn, params, eps: float = 1e-5) -> float:
    """Compare analytic gradients against central differences.

    ``loss_fn`` takes a fresh Graph and returns a scalar Tensor that
    depends on ``params`` (trainable leaves).  Returns the max over all
    parameter entries of |analytic - numeric| / max(1e-12, |analytic| + |numeric|).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")

    def loss_value() -> float:
        g = Graph()
        root = loss_fn(g)
        v = float(root.data)
        if not np.isfinite(v):
            raise FloatingPointError("grad_check: loss is not finite")
        return v

    for p in params:
        p.zero_grad()
    g = Graph()
    root = loss_fn(g)
    if not np.isfinite(root.data):
        raise FloatingPointError("grad_check: loss is not finite")
    g.backward(root)
    analytic = [p.grad.copy() for p in params]

    worst = 0.0
    for p, ana in zip(params, analytic):
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            f_plus = loss_value()
            flat[i] = orig - eps
            f_minus = loss_value()
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * eps)
            a = ana.reshape(-1)[i]
            rel = abs(a - numeric) / max(1e-12, abs(a) + abs(numeric))
            if rel > worst:
                worst = rel
    return worst
