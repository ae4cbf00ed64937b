"""Quintic Newton-Schulz orthogonalization.

For a Frobenius-normalized matrix X the iteration

    X <- a*X + (b*(X X^T) + c*(X X^T)^2) X

acts on each singular value as the odd quintic phi(s) = a*s + b*s^3 + c*s^5
while leaving the singular vectors alone, so a few steps push the
singular values toward 1 and the result approximates the polar factor
U V^T without an SVD. Diagonal matrices are closed under the step, which
gives 1D inputs an O(n) closed form (`ns_diagonal`) equivalent to
embedding them as diagonal matrices and running the dense iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor


@dataclass(frozen=True)
class NsConfig:
    """Iteration count, quintic coefficients, and the zero-input floor.

    The default coefficients (3.4445, -4.7750, 2.0315) make phi push
    singular values in (0, 1] toward 1; the middle coefficient must be
    negative or the iteration diverges.
    """

    steps: int = 5
    a: float = 3.4445
    b: float = -4.7750
    c: float = 2.0315
    eps_floor: float = 1e-12

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.eps_floor <= 0:
            raise ValueError("eps_floor must be > 0")


_DEFAULT = NsConfig()


def phi_scalar(x: float, cfg: NsConfig = _DEFAULT) -> float:
    """Apply the quintic cfg.steps times to a scalar; odd in x."""
    x = float(x)
    for _ in range(cfg.steps):
        x2 = x * x
        x = x * (cfg.a + x2 * (cfg.b + cfg.c * x2))
    return x


def ns_orthogonalize(g, cfg: NsConfig = _DEFAULT) -> np.ndarray:
    """Newton-Schulz orthogonalization of a matrix.

    Normalizes by the Frobenius norm, runs cfg.steps iterations, and
    returns a matrix of the same shape whose singular values are
    phi^steps of the normalized input's. Inputs with norm at or below
    cfg.eps_floor map to the zero matrix. Tall inputs are iterated in
    the transposed orientation so X X^T is the smaller Gram matrix;
    the result is transposed back (the iteration commutes with
    transposition).
    """
    g = tensor.matrix(g)
    nrm = tensor.frobenius_norm(g)
    if nrm <= cfg.eps_floor:
        return np.zeros_like(g)
    x = g / nrm
    tall = x.shape[0] > x.shape[1]
    if tall:
        x = tensor.transpose(x)
    for _ in range(cfg.steps):
        gram = tensor.matmul(x, tensor.transpose(x))
        poly = cfg.b * gram + cfg.c * tensor.matmul(gram, gram)
        x = cfg.a * x + tensor.matmul(poly, x)
    if tall:
        x = tensor.transpose(x)
    return x


def ns_diagonal(d, cfg: NsConfig = _DEFAULT) -> np.ndarray:
    """Closed form of the dense iteration on diag(d): elementwise phi.

    Normalizes by the euclidean norm and applies the quintic entrywise,
    so each output entry keeps the sign of its input entry (phi is odd
    and has no real roots besides 0 with the default coefficients).
    Inputs with norm at or below cfg.eps_floor map to the zero vector.
    """
    d = tensor.vector(d)
    nrm = float(np.sqrt(np.sum(d * d)))
    if nrm <= cfg.eps_floor:
        return np.zeros_like(d)
    s = d / nrm
    for _ in range(cfg.steps):
        s2 = s * s
        s = s * (cfg.a + s2 * (cfg.b + cfg.c * s2))
    return s
