"""Minimal dense float64 linear algebra with bit-reproducible results.

Everything downstream (Newton-Schulz, the optimizers, the training
harness) is built on the handful of operations in this module. Two rules
hold for every public operation:

* inputs and outputs must be finite; NaN/Inf raises, never passes silently;
* matrix products accumulate over the inner dimension in a fixed
  left-to-right order, so results are bit-identical across runs and
  regardless of how many threads the process could use.

Arrays are row-major (C-contiguous) float64. Shapes must match exactly;
there is no broadcasting.
"""

from __future__ import annotations

import numpy as np


class NonFiniteError(ValueError):
    """A value that must be finite contains NaN or Inf."""


def matrix(data) -> np.ndarray:
    """Validate and return `data` as a finite 2D C-contiguous float64 array."""
    return _as_array(data, 2, "matrix")


def vector(data) -> np.ndarray:
    """Validate and return `data` as a finite 1D C-contiguous float64 array."""
    return _as_array(data, 1, "vector")


def _as_array(data, ndim: int, what: str) -> np.ndarray:
    a = np.ascontiguousarray(data, dtype=np.float64)
    if a.ndim != ndim:
        raise ValueError(f"{what} must be {ndim}D, got shape {a.shape}")
    if a.size == 0:
        raise ValueError(f"{what} dimensions must be positive, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise NonFiniteError(f"{what} contains non-finite entries")
    return a


def matmul(a, b) -> np.ndarray:
    """Matrix product with a fixed left-to-right accumulation over the inner dim.

    Bit-identical to the naive triple loop for every shape. einsum's
    non-BLAS kernel already accumulates in index order, except that it
    switches to an unrolled dot-product kernel when the output has a
    single column; that case is accumulated rank-1 style instead.
    """
    a = matrix(a)
    b = matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul inner dimensions differ: {a.shape} x {b.shape}")
    if b.shape[1] == 1:
        out = np.zeros((a.shape[0], 1))
        for k in range(a.shape[1]):
            out[:, 0] += a[:, k] * b[k, 0]
    else:
        out = np.einsum("ik,kj->ij", a, b, optimize=False)
    if not np.isfinite(out).all():
        raise NonFiniteError("matmul produced a non-finite value")
    return out


def transpose(a) -> np.ndarray:
    """Transposed copy; transpose(transpose(a)) round-trips bit-exactly."""
    return np.ascontiguousarray(matrix(a).T)


def frobenius_norm(a) -> float:
    """sqrt of the sum of squared entries."""
    a = matrix(a)
    out = float(np.sqrt(np.sum(a * a)))
    if not np.isfinite(out):
        raise NonFiniteError("frobenius_norm overflowed")
    return out


def axpy_scale(alpha: float, x, beta: float, y) -> np.ndarray:
    """Elementwise alpha*x + beta*y for identically shaped matrices."""
    x = matrix(x)
    y = matrix(y)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    out = float(alpha) * x + float(beta) * y
    if not np.isfinite(out).all():
        raise NonFiniteError("axpy_scale produced a non-finite value")
    return out


def diag_embed(v) -> np.ndarray:
    """Square matrix with v on the main diagonal, exact zeros elsewhere."""
    return np.diag(vector(v))


def diag_extract(m) -> np.ndarray:
    """Main diagonal of a square matrix; off-diagonal entries are ignored."""
    m = matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"diag_extract needs a square matrix, got {m.shape}")
    return np.diagonal(m).copy()
