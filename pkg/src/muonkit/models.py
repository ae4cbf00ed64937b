"""Hand-differentiated MLP and deterministic synthetic tasks.

The model is deliberately small but exercises both optimizer paths: two
weight matrices (W1, W2) for the Newton-Schulz group and four 1D
parameters (biases, layer-norm gain and shift) for the vector path.
Gradients are analytic; there is no autodiff framework underneath, so
the finite-difference oracle has full coverage.

All randomness (weight init, cluster means, noise, sample positions)
comes from a splitmix64 stream, which any language can reproduce
bit-for-bit from the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import tensor
from .optim import ParamTensor

LAYER_NORM_EPS = 1e-5

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """splitmix64 pseudo-random stream.

    The stream is counter-based (output i depends only on
    seed + (i+1)*GAMMA), so blocks of draws vectorize without changing
    the sequence.
    """

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def uniforms(self, n: int) -> np.ndarray:
        """Next n doubles in [0, 1), 53-bit resolution."""
        base = self._state
        idx = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(base) + idx * np.uint64(_GAMMA)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            z = z ^ (z >> np.uint64(31))
        self._state = (base + n * _GAMMA) & _MASK64
        return (z >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def normals(self, n: int) -> np.ndarray:
        """Next n standard normals via Box-Muller (two uniforms per pair)."""
        pairs = (n + 1) // 2
        u1 = np.maximum(self.uniforms(pairs), 2.0 ** -53)  # log(0) guard
        u2 = self.uniforms(pairs)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]


@dataclass
class MlpModel:
    """x -> layer_norm(x W1 + b1) * gain + beta -> relu -> W2 + b2 -> softmax CE."""

    W1: np.ndarray
    b1: np.ndarray
    gain: np.ndarray
    beta: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        self.W1 = tensor.matrix(self.W1)
        self.W2 = tensor.matrix(self.W2)
        self.b1 = tensor.vector(self.b1)
        self.gain = tensor.vector(self.gain)
        self.beta = tensor.vector(self.beta)
        self.b2 = tensor.vector(self.b2)
        h = self.W1.shape[1]
        if not (self.b1.shape == self.gain.shape == self.beta.shape == (h,)):
            raise ValueError("hidden-size parameters are inconsistent")
        if self.W2.shape[0] != h or self.b2.shape != (self.W2.shape[1],):
            raise ValueError("output-layer shapes are inconsistent")

    @property
    def in_dim(self) -> int:
        return self.W1.shape[0]

    @property
    def hidden(self) -> int:
        return self.W1.shape[1]

    @property
    def n_classes(self) -> int:
        return self.W2.shape[1]

    def params(self) -> list[ParamTensor]:
        return [
            ParamTensor("W1", self.W1, "hidden_matrix"),
            ParamTensor("b1", self.b1, "bias"),
            ParamTensor("gain", self.gain, "gain"),
            ParamTensor("beta", self.beta, "bias"),
            ParamTensor("W2", self.W2, "hidden_matrix"),
            ParamTensor("b2", self.b2, "bias"),
        ]

    def load(self, params: list[ParamTensor]):
        """Copy parameter values back into the model fields (by name)."""
        for p in params:
            setattr(self, p.name, p.value)

    def copy(self) -> "MlpModel":
        return MlpModel(self.W1.copy(), self.b1.copy(), self.gain.copy(),
                        self.beta.copy(), self.W2.copy(), self.b2.copy())


def init_model(seed: int, in_dim: int, hidden: int, n_classes: int) -> MlpModel:
    """Seeded init: weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)),
    gain all ones, biases and shift zero. Same seed, same model, bit for bit."""
    if min(in_dim, hidden, n_classes) < 1:
        raise ValueError("model dimensions must be positive")
    rng = SplitMix64(seed)
    w1 = (2.0 * rng.uniforms(in_dim * hidden) - 1.0) / np.sqrt(in_dim)
    w2 = (2.0 * rng.uniforms(hidden * n_classes) - 1.0) / np.sqrt(hidden)
    return MlpModel(
        W1=w1.reshape(in_dim, hidden),
        b1=np.zeros(hidden),
        gain=np.ones(hidden),
        beta=np.zeros(hidden),
        W2=w2.reshape(hidden, n_classes),
        b2=np.zeros(n_classes),
    )


@dataclass
class Batch:
    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.inputs = tensor.matrix(self.inputs)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1 or self.labels.shape[0] != self.inputs.shape[0]:
            raise ValueError("labels must be one per input row")
        if (self.labels < 0).any():
            raise ValueError("labels must be non-negative")

    def __len__(self):
        return self.inputs.shape[0]


@dataclass
class ForwardCache:
    """Intermediates retained for the backward pass."""

    inputs: np.ndarray
    xhat: np.ndarray
    inv_std: np.ndarray
    h: np.ndarray
    act: np.ndarray
    probs: np.ndarray
    labels: np.ndarray


def forward(model: MlpModel, batch: Batch) -> tuple[float, ForwardCache]:
    """Mean softmax cross-entropy of the batch plus the backward cache."""
    x = batch.inputs
    if x.shape[1] != model.in_dim:
        raise ValueError(f"batch in_dim {x.shape[1]} != model in_dim {model.in_dim}")
    if (batch.labels >= model.n_classes).any():
        raise ValueError("label out of range")
    z1 = tensor.matmul(x, model.W1) + model.b1
    mu = z1.mean(axis=1, keepdims=True)
    xc = z1 - mu
    var = (xc * xc).mean(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + LAYER_NORM_EPS)
    xhat = xc * inv_std
    h = xhat * model.gain + model.beta
    act = np.maximum(h, 0.0)
    logits = tensor.matmul(act, model.W2) + model.b2
    shifted = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - lse
    n = x.shape[0]
    loss = float(-logp[np.arange(n), batch.labels].mean())
    cache = ForwardCache(inputs=x, xhat=xhat, inv_std=inv_std, h=h, act=act,
                         probs=np.exp(logp), labels=batch.labels)
    return loss, cache


def loss_and_grads(model: MlpModel, batch: Batch) -> tuple[float, dict]:
    """Loss plus exact analytic gradients for every parameter."""
    loss, c = forward(model, batch)
    n = c.inputs.shape[0]
    dlogits = c.probs.copy()
    dlogits[np.arange(n), c.labels] -= 1.0
    dlogits /= n
    grads = {}
    grads["W2"] = tensor.matmul(tensor.transpose(c.act), dlogits)
    grads["b2"] = dlogits.sum(axis=0)
    dact = tensor.matmul(dlogits, tensor.transpose(model.W2))
    dh = dact * (c.h > 0.0)
    grads["gain"] = (dh * c.xhat).sum(axis=0)
    grads["beta"] = dh.sum(axis=0)
    dxhat = dh * model.gain
    # layer-norm backward: project out the mean and the xhat component
    m1 = dxhat.mean(axis=1, keepdims=True)
    m2 = (dxhat * c.xhat).mean(axis=1, keepdims=True)
    dz1 = c.inv_std * (dxhat - m1 - c.xhat * m2)
    grads["W1"] = tensor.matmul(tensor.transpose(c.inputs), dz1)
    grads["b1"] = dz1.sum(axis=0)
    return loss, grads


@dataclass(frozen=True)
class TaskSpec:
    """Everything needed to regenerate a dataset bit-for-bit.

    gaussian_clusters: class-conditional blobs, means uniform in
    [-mean_scale, mean_scale]^in_dim, unit-scaled noise. char_bigram:
    next-byte prediction over a text file, one-hot inputs over the
    observed byte vocabulary (in_dim/n_classes are then derived from the
    file, not from this spec).
    """

    kind: str = "gaussian_clusters"
    n_train: int = 8192
    n_val: int = 1024
    in_dim: int = 32
    n_classes: int = 8
    seed: int = 0
    text_path: str | None = None
    mean_scale: float = 2.0
    noise: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian_clusters", "char_bigram"):
            raise ValueError(f"unknown task kind {self.kind!r}")
        if self.n_train < 1 or self.n_val < 1:
            raise ValueError("n_train and n_val must be >= 1")
        if self.kind == "gaussian_clusters" and (self.in_dim < 1 or self.n_classes < 2):
            raise ValueError("gaussian_clusters needs in_dim >= 1 and n_classes >= 2")
        if self.kind == "char_bigram" and not self.text_path:
            raise ValueError("char_bigram needs text_path")


def make_task(spec: TaskSpec, batch_size: int = 64) -> tuple[list[Batch], list[Batch]]:
    """Generate (train_batches, val_batches) for a task spec.

    Only full batches are kept (trailing remainders are dropped), so
    every loss is a mean over the same count. Identical spec and
    batch_size give bit-identical batches.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    n = spec.n_train + spec.n_val
    if spec.kind == "gaussian_clusters":
        rng = SplitMix64(spec.seed)
        k, d = spec.n_classes, spec.in_dim
        means = spec.mean_scale * (2.0 * rng.uniforms(k * d) - 1.0)
        means = means.reshape(k, d)
        labels = np.minimum((rng.uniforms(n) * k).astype(np.int64), k - 1)
        noise = rng.normals(n * d).reshape(n, d)
        inputs = means[labels] + spec.noise * noise
    else:
        data = Path(spec.text_path).read_bytes()
        if len(data) < 2:
            raise ValueError(f"text file {spec.text_path!r} is too short")
        vocab = sorted(set(data))
        index = np.full(256, -1, dtype=np.int64)
        for i, byte in enumerate(vocab):
            index[byte] = i
        codes = index[np.frombuffer(data, dtype=np.uint8)]
        rng = SplitMix64(spec.seed)
        pos = np.minimum((rng.uniforms(n) * (len(data) - 1)).astype(np.int64),
                         len(data) - 2)
        labels = codes[pos + 1]
        inputs = np.zeros((n, len(vocab)))
        inputs[np.arange(n), codes[pos]] = 1.0
    train = _batches(inputs[:spec.n_train], labels[:spec.n_train], batch_size)
    val = _batches(inputs[spec.n_train:], labels[spec.n_train:], batch_size)
    if not train or not val:
        raise ValueError("n_train and n_val must each cover at least one full batch")
    return train, val


def _batches(inputs, labels, batch_size):
    out = []
    for start in range(0, inputs.shape[0] - batch_size + 1, batch_size):
        stop = start + batch_size
        out.append(Batch(inputs[start:stop], labels[start:stop]))
    return out
