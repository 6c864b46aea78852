"""Dense float64 matrix helpers used by the forward and backward passes.

A "matrix" here is a 2-D ``numpy.ndarray`` of dtype float64. Vectors are
column matrices (``cols == 1``). Every operation checks shapes up front and
raises :class:`~parnet.exceptions.ShapeError` naming both operands, instead
of relying on numpy broadcasting.
"""

import numpy as np

from .exceptions import ShapeError

__all__ = [
    "as_matrix",
    "zeros",
    "ones",
    "matmul",
    "transpose_matmul",
    "matmul_transpose",
    "hadamard",
    "add",
    "sub",
    "scale",
    "add_column",
]


def as_matrix(a):
    """Return ``a`` as a 2-D float64 array; 1-D input becomes a column."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got array with shape {m.shape}")
    return m


def zeros(rows, cols):
    return np.zeros((rows, cols), dtype=np.float64)


def ones(rows, cols):
    return np.ones((rows, cols), dtype=np.float64)


def _require_2d(*mats):
    for m in mats:
        if m.ndim != 2:
            raise ShapeError(f"expected a 2-D matrix, got shape {m.shape}")


def matmul(a, b):
    """Standard product ``a @ b``; requires ``a.cols == b.rows``."""
    _require_2d(a, b)
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    return a @ b


def transpose_matmul(a, b):
    """``aᵀ @ b`` without copying the transpose; requires ``a.rows == b.rows``."""
    _require_2d(a, b)
    if a.shape[0] != b.shape[0]:
        raise ShapeError(f"transpose_matmul: cannot multiply {a.shape}ᵀ by {b.shape}")
    return a.T @ b


def matmul_transpose(a, b):
    """``a @ bᵀ``; requires ``a.cols == b.cols``. Used for weight gradients."""
    _require_2d(a, b)
    if a.shape[1] != b.shape[1]:
        raise ShapeError(f"matmul_transpose: cannot multiply {a.shape} by {b.shape}ᵀ")
    return a @ b.T


def _same_shape(op, a, b):
    _require_2d(a, b)
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def hadamard(a, b):
    _same_shape("hadamard", a, b)
    return a * b


def add(a, b):
    _same_shape("add", a, b)
    return a + b


def sub(a, b):
    _same_shape("sub", a, b)
    return a - b


def scale(a, s):
    _require_2d(a)
    return a * float(s)


def add_column(a, col):
    """Add column vector ``col`` (``rows x 1``) to every column of ``a``."""
    _require_2d(a, col)
    if col.shape != (a.shape[0], 1):
        raise ShapeError(f"add_column: column {col.shape} does not fit matrix {a.shape}")
    return a + col
