"""Reference bottleneck residual adapter: forward, backward, training.

The adapter maps each d-dimensional position through a down-projection to a
narrow bottleneck, an exact-erf GeLU, and an up-projection back to d, added
residually to the input: ``y = x + Up(GeLU(Down(x)))``. Two variants share
this per-position map: the dense variant consumes (..., d) sequences, the
1x1-convolution variant consumes channels-first feature maps. The
up-projection initialises to zero so an untrained adapter is exactly the
identity on the residual path.

Training here targets ingested feature pairs (teacher outputs); host-model
integration is represented only by the number of insertion sites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import erf

from .errors import InvalidArgumentError, TrainingError
from . import matrixio

DENSE = "dense"
CONV1X1 = "conv1x1"

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def gelu(x: np.ndarray) -> np.ndarray:
    """Exact (erf-based) GeLU."""
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * x * (1.0 + erf(x / _SQRT2))


def gelu_grad(x: np.ndarray) -> np.ndarray:
    """Derivative of the exact GeLU: Phi(x) + x * phi(x)."""
    x = np.asarray(x, dtype=np.float64)
    cdf = 0.5 * (1.0 + erf(x / _SQRT2))
    pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return cdf + x * pdf


def bottleneck_dim(d: int, r: int) -> int:
    """Width of the compressed representation: d/r, floored, at least 1."""
    return max(1, d // r)


@dataclass(frozen=True)
class AdapterConfig:
    """Shape and variant of one adapter block."""

    variant: str = DENSE
    d: int = 1024
    r: int = 8

    def __post_init__(self) -> None:
        if self.variant not in (DENSE, CONV1X1):
            raise InvalidArgumentError(f"unknown variant {self.variant!r}")
        if not (self.d >= self.r >= 1):
            raise InvalidArgumentError(
                f"need d >= r >= 1, got d={self.d}, r={self.r}"
            )

    @property
    def bottleneck(self) -> int:
        return bottleneck_dim(self.d, self.r)


@dataclass
class AdapterParams:
    """Weights of one adapter block (float64)."""

    down_weights: np.ndarray  # (d, b)
    down_bias: np.ndarray  # (b,)
    up_weights: np.ndarray  # (b, d)
    up_bias: np.ndarray  # (d,)
    reduction_factor: int

    def __post_init__(self) -> None:
        d, b = self.down_weights.shape
        if self.down_bias.shape != (b,) or self.up_weights.shape != (b, d) or self.up_bias.shape != (d,):
            raise InvalidArgumentError(
                "inconsistent parameter shapes: "
                f"down {self.down_weights.shape}, down_bias {self.down_bias.shape}, "
                f"up {self.up_weights.shape}, up_bias {self.up_bias.shape}"
            )
        for name in ("down_weights", "down_bias", "up_weights", "up_bias"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise InvalidArgumentError(f"{name} contains non-finite values")

    @property
    def d(self) -> int:
        return self.down_weights.shape[0]

    @property
    def bottleneck(self) -> int:
        return self.down_weights.shape[1]

    @classmethod
    def initialize(cls, cfg: AdapterConfig, seed: int = 0) -> "AdapterParams":
        """Small random down-projection, zero up-projection (identity start)."""
        rng = np.random.default_rng(seed)
        b = cfg.bottleneck
        return cls(
            down_weights=rng.normal(0.0, 1.0 / math.sqrt(cfg.d), size=(cfg.d, b)),
            down_bias=np.zeros(b),
            up_weights=np.zeros((b, cfg.d)),
            up_bias=np.zeros(cfg.d),
            reduction_factor=cfg.r,
        )

    def tensors(self) -> dict[str, np.ndarray]:
        return {
            "down_weights": self.down_weights,
            "down_bias": self.down_bias,
            "up_weights": self.up_weights,
            "up_bias": self.up_bias,
        }

    def save(self, directory: str | Path) -> None:
        matrixio.save_tensors(Path(directory), self.tensors())

    @classmethod
    def load(cls, directory: str | Path, reduction_factor: int | None = None) -> "AdapterParams":
        tensors = matrixio.load_tensors(directory)
        d = tensors["down_weights"].shape[0]
        b = tensors["down_weights"].shape[1]
        if reduction_factor is None:
            reduction_factor = max(1, d // b)
        return cls(
            down_weights=tensors["down_weights"].astype(np.float64),
            down_bias=tensors["down_bias"].astype(np.float64),
            up_weights=tensors["up_weights"].astype(np.float64),
            up_bias=tensors["up_bias"].astype(np.float64),
            reduction_factor=reduction_factor,
        )


@dataclass
class AdapterGrads:
    """Parameter gradients, shaped like the parameters themselves."""

    down_weights: np.ndarray
    down_bias: np.ndarray
    up_weights: np.ndarray
    up_bias: np.ndarray

    def tensors(self) -> dict[str, np.ndarray]:
        return {
            "down_weights": self.down_weights,
            "down_bias": self.down_bias,
            "up_weights": self.up_weights,
            "up_bias": self.up_bias,
        }


def _as_positions(x: np.ndarray, d: int) -> tuple[np.ndarray, tuple[int, ...]]:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim < 1 or arr.shape[-1] != d:
        raise InvalidArgumentError(
            f"expected last dimension {d}, got input shape {arr.shape}"
        )
    return arr.reshape(-1, d), arr.shape


def adapter_forward(x: np.ndarray, params: AdapterParams) -> np.ndarray:
    """Apply the adapter position-wise over the last axis.

    Accepts any leading shape: a single position (d,), a sequence (T, d),
    or a batch of sequences (B, T, d).
    """
    flat, shape = _as_positions(x, params.d)
    hidden = flat @ params.down_weights + params.down_bias
    out = flat + gelu(hidden) @ params.up_weights + params.up_bias
    return out.reshape(shape)


def conv1x1_forward(feature_map: np.ndarray, params: AdapterParams) -> np.ndarray:
    """The 1x1-convolution variant over a channels-first feature map.

    A kernel-size-1 convolution is the same per-position map as the dense
    adapter, so a (C, *spatial) map is flattened to positions, transformed,
    and restored.
    """
    arr = np.asarray(feature_map, dtype=np.float64)
    if arr.ndim < 1 or arr.shape[0] != params.d:
        raise InvalidArgumentError(
            f"expected leading channel dimension {params.d}, got shape {arr.shape}"
        )
    positions = arr.reshape(params.d, -1).T
    out = adapter_forward(positions, params)
    return out.T.reshape(arr.shape)


def adapter_backward(
    x: np.ndarray, params: AdapterParams, upstream_grad: np.ndarray
) -> tuple[np.ndarray, AdapterGrads]:
    """Exact analytic gradients of the forward map.

    Returns the gradient with respect to the input (including the identity
    term contributed by the residual connection) and the parameter
    gradients.
    """
    flat, shape = _as_positions(x, params.d)
    grad_flat, upstream_shape = _as_positions(upstream_grad, params.d)
    if upstream_shape != shape:
        raise InvalidArgumentError(
            f"upstream gradient shape {upstream_shape} does not match input shape {shape}"
        )
    hidden = flat @ params.down_weights + params.down_bias
    activated = gelu(hidden)

    grad_up_bias = grad_flat.sum(axis=0)
    grad_up_weights = activated.T @ grad_flat
    grad_activated = grad_flat @ params.up_weights.T
    grad_hidden = grad_activated * gelu_grad(hidden)
    grad_down_bias = grad_hidden.sum(axis=0)
    grad_down_weights = flat.T @ grad_hidden
    grad_x = grad_flat + grad_hidden @ params.down_weights.T

    return grad_x.reshape(shape), AdapterGrads(
        down_weights=grad_down_weights,
        down_bias=grad_down_bias,
        up_weights=grad_up_weights,
        up_bias=grad_up_bias,
    )


def param_count(
    cfg: AdapterConfig, n_sites: int, base_params: int | None = None
) -> tuple[int, float | None]:
    """Trainable parameter count across sites, and the fraction of the base.

    One site holds d*b + b (down) plus b*d + d (up) parameters. The fraction
    is None when no base-model size is supplied.
    """
    if n_sites < 0:
        raise InvalidArgumentError(f"n_sites must be >= 0, got {n_sites}")
    b = cfg.bottleneck
    per_site = 2 * cfg.d * b + b + cfg.d
    total = per_site * n_sites
    if base_params is None:
        return total, None
    if base_params <= 0:
        raise InvalidArgumentError(f"base_params must be > 0, got {base_params}")
    return total, total / base_params


@dataclass(frozen=True)
class TrainConfig:
    """Optimiser settings for adapter fine-tuning on feature pairs."""

    lr: float = 5e-5
    weight_decay: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class AdamState:
    """First/second moment accumulators for the decoupled-decay optimiser."""

    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: AdapterParams) -> "AdamState":
        return cls(
            step=0,
            m={k: np.zeros_like(t) for k, t in params.tensors().items()},
            v={k: np.zeros_like(t) for k, t in params.tensors().items()},
        )


def mse_loss_and_grads(
    inputs: np.ndarray, targets: np.ndarray, params: AdapterParams
) -> tuple[float, AdapterGrads]:
    """Mean-squared reconstruction loss and its parameter gradients."""
    outputs = adapter_forward(inputs, params)
    targets = np.asarray(targets, dtype=np.float64)
    if targets.shape != outputs.shape:
        raise InvalidArgumentError(
            f"target shape {targets.shape} does not match output shape {outputs.shape}"
        )
    residual = outputs - targets
    loss = float(np.mean(residual**2))
    if not math.isfinite(loss):
        raise TrainingError(
            f"non-finite loss {loss}; output range "
            f"[{np.min(outputs):g}, {np.max(outputs):g}], target range "
            f"[{np.min(targets):g}, {np.max(targets):g}]"
        )
    upstream = 2.0 * residual / residual.size
    _, grads = adapter_backward(inputs, params, upstream)
    return loss, grads


def train_step(
    batch: tuple[np.ndarray, np.ndarray],
    params: AdapterParams,
    state: AdamState,
    cfg: TrainConfig = TrainConfig(),
) -> tuple[AdapterParams, AdamState, float]:
    """One decoupled-weight-decay adaptive-moment update on the MSE loss.

    Returns fresh parameter and optimiser states plus the pre-update loss.
    """
    inputs, targets = batch
    loss, grads = mse_loss_and_grads(inputs, targets, params)
    t = state.step + 1
    new_tensors: dict[str, np.ndarray] = {}
    new_m: dict[str, np.ndarray] = {}
    new_v: dict[str, np.ndarray] = {}
    grad_tensors = grads.tensors()
    for name, tensor in params.tensors().items():
        g = grad_tensors[name]
        m = cfg.beta1 * state.m[name] + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * state.v[name] + (1.0 - cfg.beta2) * g * g
        m_hat = m / (1.0 - cfg.beta1**t)
        v_hat = v / (1.0 - cfg.beta2**t)
        updated = tensor - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
        updated = updated - cfg.lr * cfg.weight_decay * tensor
        new_tensors[name] = updated
        new_m[name] = m
        new_v[name] = v
    new_params = AdapterParams(
        down_weights=new_tensors["down_weights"],
        down_bias=new_tensors["down_bias"],
        up_weights=new_tensors["up_weights"],
        up_bias=new_tensors["up_bias"],
        reduction_factor=params.reduction_factor,
    )
    return new_params, AdamState(step=t, m=new_m, v=new_v), loss


def train(
    inputs: np.ndarray,
    targets: np.ndarray,
    params: AdapterParams,
    steps: int,
    cfg: TrainConfig = TrainConfig(),
) -> tuple[AdapterParams, list[tuple[int, float]]]:
    """Full-batch training loop; returns final params and the loss curve."""
    state = AdamState.for_params(params)
    curve: list[tuple[int, float]] = []
    for _ in range(steps):
        params, state, loss = train_step((inputs, targets), params, state, cfg)
        curve.append((state.step, loss))
    return params, curve
