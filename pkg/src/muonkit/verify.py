"""Oracle-backed verification suites.

Each check compares a production path against an independent reference:
the dense orthogonalizer against the exact Jacobi SVD, the 1D closed
form against the literal diagonal embedding, and the analytic gradients
against central finite differences. The `verify` CLI subcommand runs all
of them; the acceptance tests pin the same defaults.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import oracles
from .models import Batch, forward, init_model, loss_and_grads
from .newton_schulz import NsConfig, ns_diagonal, ns_orthogonalize, phi_scalar
from .tensor import frobenius_norm


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def expected_from_svd(g: np.ndarray, cfg: NsConfig = NsConfig()) -> np.ndarray:
    """U phi^steps(S) V^T of the Frobenius-normalized input, via the SVD oracle."""
    res = oracles.svd_jacobi(g)
    s = res.S / frobenius_norm(g)
    phi = np.array([phi_scalar(x, cfg) for x in s])
    return res.U @ np.diag(phi) @ res.V.T


def check_ns_vs_svd(n_matrices: int = 100, max_dim: int = 32, tol: float = 1e-6,
                    seed: int = 1001) -> CheckResult:
    """Orthogonalizer output equals U phi^steps(S) V^T within `tol` relative."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_matrices):
        rows = int(rng.integers(1, max_dim + 1))
        cols = int(rng.integers(1, max_dim + 1))
        g = rng.standard_normal((rows, cols))
        want = expected_from_svd(g)
        got = ns_orthogonalize(g)
        rel = float(np.linalg.norm(got - want) / np.linalg.norm(want))
        worst = max(worst, rel)
    return CheckResult(
        name="newton-schulz vs SVD identity",
        passed=worst <= tol,
        detail=f"max relative error {worst:.3e} over {n_matrices} matrices (tol {tol:.0e})",
        seconds=time.perf_counter() - t0,
    )


def check_diagonal_vs_dense(n_vectors: int = 50, max_len: int = 64, tol: float = 1e-9,
                            seed: int = 1002) -> CheckResult:
    """1D closed form matches the literal diag-embed dense path per entry."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_vectors):
        v = rng.standard_normal(int(rng.integers(1, max_len + 1)))
        diff = np.abs(ns_diagonal(v) - oracles.muonall_1d_dense_oracle(v))
        worst = max(worst, float(diff.max()))
    return CheckResult(
        name="1D closed form vs dense embedding",
        passed=worst <= tol,
        detail=f"max per-entry error {worst:.3e} over {n_vectors} vectors (tol {tol:.0e})",
        seconds=time.perf_counter() - t0,
    )


def random_model_and_batch(seed: int, in_dim: int = 6, hidden: int = 8,
                           n_classes: int = 4, batch: int = 4):
    """Small random (model, batch) pair for gradient checking."""
    rng = np.random.default_rng(seed)
    model = init_model(seed, in_dim, hidden, n_classes)
    # jitter the zero-initialized 1D parameters so their gradients are generic
    for p in model.params():
        setattr(model, p.name, p.value + 0.05 * rng.standard_normal(p.value.shape))
    inputs = rng.standard_normal((batch, in_dim))
    labels = rng.integers(0, n_classes, size=batch)
    return model, Batch(inputs, labels)


def check_gradients(n_pairs: int = 20, tol: float = 1e-5, seed: int = 1003) -> CheckResult:
    """Analytic gradients match central differences within `tol` relative."""
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(n_pairs):
        model, batch = random_model_and_batch(seed + i)
        _, analytic = loss_and_grads(model, batch)
        numeric = oracles.finite_diff_grads(lambda m, b: forward(m, b)[0], model, batch)
        for name, fd in numeric.items():
            scale = float(np.abs(fd).max())
            rel = float(np.abs(analytic[name] - fd).max()) / max(scale, 1e-12)
            worst = max(worst, rel)
    return CheckResult(
        name="analytic vs finite-difference gradients",
        passed=worst <= tol,
        detail=f"max relative error {worst:.3e} over {n_pairs} model/batch pairs (tol {tol:.0e})",
        seconds=time.perf_counter() - t0,
    )


def run_all() -> list[CheckResult]:
    return [check_ns_vs_svd(), check_diagonal_vs_dense(), check_gradients()]
