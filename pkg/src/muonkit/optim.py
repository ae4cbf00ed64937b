"""AdamW, Muon, and MuonAll over named 1D/2D parameters.

Muon orthogonalizes the Nesterov-combined momentum of matrix parameters
with Newton-Schulz and hands every non-matrix parameter to an AdamW
sidecar. MuonAll drops the sidecar: 1D parameters are treated as
diagonal matrices inside the same iteration (via the O(n) closed form),
so a single optimizer covers the whole model. Matrix parameters take
bit-identical paths under Muon and MuonAll.

Per-parameter step functions (`adamw_step`, `muon_matrix_step`,
`muonall_step`) mutate their state object and return the new parameter
value; the driver classes (`AdamW`, `Muon`, `MuonAll`) wire them to a
list of `ParamTensor`s and a gradient dict.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import tensor
from .newton_schulz import NsConfig, ns_diagonal, ns_orthogonalize
from .tensor import NonFiniteError

ROLES = ("hidden_matrix", "embedding", "bias", "gain")
OPTIMIZERS = ("adamw", "muon", "muonall")

#: Every linear schedule decays to this rate at the final step.
LR_FINAL = 1e-7


@dataclass(eq=False)
class ParamTensor:
    """A named model parameter (matrix or vector) with a partitioning role."""

    name: str
    value: np.ndarray
    role: str = "hidden_matrix"

    def __post_init__(self):
        nd = np.ndim(self.value)
        if nd == 2:
            self.value = tensor.matrix(self.value)
        elif nd == 1:
            self.value = tensor.vector(self.value)
        else:
            raise ValueError(f"parameter {self.name!r} must be 1D or 2D, got {nd}D")
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")

    @property
    def shape_kind(self) -> str:
        return "matrix" if self.value.ndim == 2 else "vector"


@dataclass
class ParamGroups:
    """Partition of a model's parameters: `main` for the chosen optimizer's
    native path, `aux` for Muon's AdamW sidecar (empty otherwise)."""

    main: list[ParamTensor]
    aux: list[ParamTensor]


def partition_params(params, optimizer: str, aux_roles=()) -> ParamGroups:
    """Split parameters into optimizer groups.

    Muon keeps matrix-shaped parameters (any role not listed in
    `aux_roles`) and sends the rest to the AdamW sidecar; AdamW and
    MuonAll use a single group with everything. Parameter names must be
    unique.
    """
    params = list(params)
    names = [p.name for p in params]
    if len(set(names)) != len(names):
        raise ValueError("parameter names must be unique")
    if optimizer not in OPTIMIZERS:
        raise ValueError(f"unknown optimizer {optimizer!r}")
    if optimizer != "muon":
        return ParamGroups(main=params, aux=[])
    main, aux = [], []
    for p in params:
        (main if p.shape_kind == "matrix" and p.role not in aux_roles else aux).append(p)
    return ParamGroups(main=main, aux=aux)


@dataclass
class AdamHyper:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if self.eps <= 0:
            raise ValueError("eps must be > 0")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")


@dataclass
class MuonHyper:
    """Hyperparameters for Muon / MuonAll.

    `lr_aux` and `adam_aux` configure Muon's AdamW sidecar and are unused
    by MuonAll. `update_scale`, when set, maps a parameter shape to a
    multiplier on the orthogonalized update (identity when None); no
    particular formula is built in.
    """

    lr_matrix: float
    lr_aux: float | None = None
    mu: float = 0.95
    weight_decay: float = 0.0
    ns: NsConfig = field(default_factory=NsConfig)
    adam_aux: AdamHyper | None = None
    update_scale: Callable[[tuple[int, ...]], float] | None = None

    def __post_init__(self):
        if self.lr_matrix <= 0:
            raise ValueError("lr_matrix must be > 0")
        if self.lr_aux is not None and self.lr_aux <= 0:
            raise ValueError("lr_aux must be > 0")
        if not 0 <= self.mu < 1:
            raise ValueError("mu must lie in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if self.adam_aux is None and self.lr_aux is not None:
            self.adam_aux = AdamHyper(lr=self.lr_aux)


@dataclass
class AdamState:
    """First/second moment buffers and step counter for one parameter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def for_param(cls, value: np.ndarray) -> "AdamState":
        return cls(m=np.zeros_like(value), v=np.zeros_like(value))


@dataclass
class MuonState:
    """Momentum buffer for one parameter."""

    b: np.ndarray

    @classmethod
    def for_param(cls, value: np.ndarray) -> "MuonState":
        return cls(b=np.zeros_like(value))


def _checked_grad(grad, value: np.ndarray) -> np.ndarray:
    grad = np.ascontiguousarray(grad, dtype=np.float64)
    if grad.shape != value.shape:
        raise ValueError(f"gradient shape {grad.shape} != parameter shape {value.shape}")
    if not np.isfinite(grad).all():
        raise NonFiniteError("non-finite gradient; step rejected")
    return grad


def adamw_step(value: np.ndarray, grad, state: AdamState, hyper: AdamHyper,
               lr_now: float) -> np.ndarray:
    """One AdamW step with decoupled weight decay; mutates `state`.

    Bias-corrected moments drive the update; decay shrinks the parameter
    directly by lr_now * weight_decay before the moment update is
    applied, independent of the gradient path. State advances even when
    lr_now is 0.
    """
    grad = _checked_grad(grad, value)
    if lr_now < 0:
        raise ValueError("lr_now must be >= 0")
    state.t += 1
    state.m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * grad
    state.v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * (grad * grad)
    m_hat = state.m / (1.0 - hyper.beta1 ** state.t)
    v_hat = state.v / (1.0 - hyper.beta2 ** state.t)
    out = value - lr_now * hyper.weight_decay * value
    return out - lr_now * m_hat / (np.sqrt(v_hat) + hyper.eps)


def _apply_ortho_update(value: np.ndarray, ortho: np.ndarray, hyper: MuonHyper,
                        lr_now: float) -> np.ndarray:
    scale = hyper.update_scale(value.shape) if hyper.update_scale is not None else 1.0
    out = value
    if hyper.weight_decay > 0.0:
        out = out * (1.0 - lr_now * hyper.weight_decay)
    return out - (lr_now * scale) * ortho


def muon_matrix_step(value: np.ndarray, grad, state: MuonState, hyper: MuonHyper,
                     lr_now: float) -> np.ndarray:
    """One Muon step on a matrix parameter; mutates `state`.

    The buffer update comes first (b <- mu*b + g), then the Nesterov
    combination g + mu*b of the *updated* buffer feeds Newton-Schulz.
    """
    grad = _checked_grad(grad, value)
    state.b = hyper.mu * state.b + grad
    ortho = ns_orthogonalize(grad + hyper.mu * state.b, hyper.ns)
    return _apply_ortho_update(value, ortho, hyper, lr_now)


def muonall_step(value: np.ndarray, grad, state: MuonState, hyper: MuonHyper,
                 lr_now: float) -> np.ndarray:
    """One MuonAll step; matrices take exactly the Muon matrix path,
    vectors run the diagonal-matrix form of the same iteration."""
    if value.ndim == 2:
        return muon_matrix_step(value, grad, state, hyper, lr_now)
    grad = _checked_grad(grad, value)
    state.b = hyper.mu * state.b + grad
    ortho = ns_diagonal(grad + hyper.mu * state.b, hyper.ns)
    return _apply_ortho_update(value, ortho, hyper, lr_now)


def lr_schedule(step: int, total_steps: int, lr0: float) -> float:
    """Linear decay from lr0 at step 0 to LR_FINAL at step == total_steps."""
    if total_steps < 1:
        raise ValueError("total_steps must be >= 1")
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    frac = step / total_steps
    return (1.0 - frac) * lr0 + frac * LR_FINAL


class AdamW:
    """Drives adamw_step over every parameter."""

    def __init__(self, params, hyper: AdamHyper):
        self.groups = partition_params(params, "adamw")
        self.hyper = hyper
        self.state = {p.name: AdamState.for_param(p.value) for p in self.groups.main}

    def step(self, grads: dict, lr_now: float):
        for p in self.groups.main:
            p.value = adamw_step(p.value, grads[p.name], self.state[p.name],
                                 self.hyper, lr_now)


class Muon:
    """Newton-Schulz on the matrix group, AdamW sidecar on the rest."""

    def __init__(self, params, hyper: MuonHyper, aux_roles=()):
        self.groups = partition_params(params, "muon", aux_roles)
        if self.groups.aux and hyper.adam_aux is None:
            raise ValueError("muon needs lr_aux (or adam_aux) for non-matrix parameters")
        self.hyper = hyper
        self.state = {p.name: MuonState.for_param(p.value) for p in self.groups.main}
        self.state.update(
            {p.name: AdamState.for_param(p.value) for p in self.groups.aux})

    def step(self, grads: dict, lr_now: float, lr_aux_now: float = 0.0):
        for p in self.groups.main:
            p.value = muon_matrix_step(p.value, grads[p.name], self.state[p.name],
                                       self.hyper, lr_now)
        for p in self.groups.aux:
            p.value = adamw_step(p.value, grads[p.name], self.state[p.name],
                                 self.hyper.adam_aux, lr_aux_now)


class MuonAll:
    """Single-group optimizer: muonall_step for every parameter."""

    def __init__(self, params, hyper: MuonHyper):
        self.groups = partition_params(params, "muonall")
        self.hyper = hyper
        self.state = {p.name: MuonState.for_param(p.value) for p in self.groups.main}

    def step(self, grads: dict, lr_now: float):
        for p in self.groups.main:
            p.value = muonall_step(p.value, grads[p.name], self.state[p.name],
                                   self.hyper, lr_now)
