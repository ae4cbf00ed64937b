"""Brute-force references used only by tests and the verification suite.

Exact small-matrix SVD (one-sided Jacobi), polar factors, central finite
differences, and the literal dense-embedding path for 1D
orthogonalization. These exist to check the production code from an
independent direction; no production module imports this one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tensor
from .newton_schulz import NsConfig, ns_orthogonalize

MAX_ORACLE_DIM = 64
_SWEEP_CAP = 60
_ROTATION_TOL = 1e-14


class OracleError(RuntimeError):
    """An oracle computation failed; the enclosing test must abort."""


@dataclass
class SvdResult:
    """Thin SVD: U (m x r), S (r, descending, >= 0), V (n x r), r = min(m, n)."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray


def svd_jacobi(a) -> SvdResult:
    """One-sided Jacobi SVD for matrices up to 64x64.

    Rotates column pairs until every off-diagonal column dot product is
    below 1e-14 relative to the column norms; raises OracleError if that
    takes more than 60 sweeps.
    """
    a = tensor.matrix(a)
    if max(a.shape) > MAX_ORACLE_DIM:
        raise ValueError(f"oracle handles at most {MAX_ORACLE_DIM}x{MAX_ORACLE_DIM}, got {a.shape}")
    if a.shape[0] < a.shape[1]:
        res = svd_jacobi(tensor.transpose(a))
        return SvdResult(U=res.V, S=res.S, V=res.U)

    b = a.copy()
    n = a.shape[1]
    v = np.eye(n)
    for _ in range(_SWEEP_CAP):
        rotated = False
        for i in range(n - 1):
            for j in range(i + 1, n):
                bi, bj = b[:, i], b[:, j]
                alpha = float(bi @ bi)
                beta = float(bj @ bj)
                gamma = float(bi @ bj)
                if abs(gamma) <= _ROTATION_TOL * math.sqrt(alpha * beta):
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.hypot(1.0, zeta))
                cs = 1.0 / math.sqrt(1.0 + t * t)
                sn = cs * t
                b[:, i], b[:, j] = cs * bi - sn * bj, sn * bi + cs * bj
                v[:, i], v[:, j] = cs * v[:, i] - sn * v[:, j], sn * v[:, i] + cs * v[:, j]
                rotated = True
        if not rotated:
            break
    else:
        raise OracleError(f"Jacobi SVD did not converge within {_SWEEP_CAP} sweeps")

    norms = np.sqrt((b * b).sum(axis=0))
    order = np.argsort(-norms, kind="stable")
    s = norms[order]
    u = np.zeros((a.shape[0], n))
    for k, col in enumerate(order):
        if norms[col] > 0.0:
            u[:, k] = b[:, col] / norms[col]
    _complete_zero_columns(u, s)
    return SvdResult(U=u, S=s, V=np.ascontiguousarray(v[:, order]))


def _complete_zero_columns(u, s):
    # Null singular directions leave their U columns undetermined; fill them
    # with canonical basis vectors orthogonalized against the rest so that
    # U^T U = I still holds.
    for k in range(u.shape[1]):
        if s[k] > 0.0:
            continue
        for basis in range(u.shape[0]):
            cand = np.zeros(u.shape[0])
            cand[basis] = 1.0
            cand -= u @ (u.T @ cand)
            nrm = float(np.sqrt(cand @ cand))
            if nrm > 0.5:
                u[:, k] = cand / nrm
                break


def polar_factor(a) -> np.ndarray:
    """Exact polar factor U V^T from the Jacobi SVD; needs full rank."""
    res = svd_jacobi(a)
    if float(res.S.min()) <= 1e-10:
        raise ValueError("polar factor undefined: input is (near) rank-deficient")
    return res.U @ res.V.T


def finite_diff_grads(loss_fn, model, batch, eps: float = 1e-6) -> dict:
    """Central differences (L(th+eps) - L(th-eps)) / (2 eps) per parameter entry."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    probe = model.copy()
    grads = {}
    for p in model.params():
        arr = getattr(probe, p.name)
        g = np.zeros_like(arr)
        for idx in np.ndindex(arr.shape):
            orig = arr[idx]
            arr[idx] = orig + eps
            lp = loss_fn(probe, batch)
            arr[idx] = orig - eps
            lm = loss_fn(probe, batch)
            arr[idx] = orig
            if not (math.isfinite(lp) and math.isfinite(lm)):
                raise OracleError(f"non-finite loss while probing {p.name}{list(idx)}")
            g[idx] = (lp - lm) / (2.0 * eps)
        grads[p.name] = g
    return grads


def muonall_1d_dense_oracle(v, cfg: NsConfig = NsConfig()) -> np.ndarray:
    """Literal 1D path: embed as a diagonal matrix, run the dense
    Newton-Schulz iteration, extract the diagonal. O(n^2) memory; the
    production closed form must agree with this."""
    v = tensor.vector(v)
    if v.shape[0] > 256:
        raise ValueError("dense 1D oracle capped at length 256")
    return tensor.diag_extract(ns_orthogonalize(tensor.diag_embed(v), cfg))
