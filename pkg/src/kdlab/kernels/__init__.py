"""Array-kernel backend selection.

The hot kernels (dense-layer matmuls, activations, row reductions) exist
twice: a compiled Cython module (``kdlab.kernels._fast``) and a plain
numpy module (``kdlab.kernels.py``).  The compiled one is preferred when
it imports; set ``KDLAB_KERNELS=python`` or ``KDLAB_KERNELS=compiled`` to
force a backend.  Both produce float64 results that agree to rounding;
a single process always uses exactly one backend.
"""

import os

from . import py as _py_backend

_choice = os.environ.get("KDLAB_KERNELS", "auto")

if _choice == "python":
    _impl = _py_backend
elif _choice in ("compiled", "auto"):
    try:
        from . import _fast as _impl
    except ImportError:
        if _choice == "compiled":
            raise ImportError(
                "KDLAB_KERNELS=compiled but kdlab.kernels._fast is not built; "
                "reinstall with a C compiler or unset KDLAB_KERNELS"
            )
        _impl = _py_backend
else:
    raise ValueError(f"KDLAB_KERNELS must be 'python', 'compiled' or 'auto', got {_choice!r}")

BACKEND = _impl.BACKEND

matmul = _impl.matmul
matmul_tn = _impl.matmul_tn
matmul_nt = _impl.matmul_nt
bias_add = _impl.bias_add
bias_sum = _impl.bias_sum
relu = _impl.relu
relu_grad = _impl.relu_grad
tanh = _impl.tanh
tanh_grad = _impl.tanh_grad
row_sumsq = _impl.row_sumsq
logsumexp_softmax_rows = _impl.logsumexp_softmax_rows


def backend_name():
    """Name of the kernel backend in use: 'python' or 'compiled'."""
    return BACKEND
