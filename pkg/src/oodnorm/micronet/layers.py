"""Inference-only layer kernels.

Every kernel takes a float32 array, accumulates in float64 where a reduction
occurs, and stores the result back as float32. Feature maps are channel-first
C x H x W; vectors are rank-1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError


@dataclass(frozen=True)
class ConvSpec:
    out_channels: int
    kernel: int
    stride: int = 1
    padding: int = 0
    weight: np.ndarray = None  # [out, in, k, k]
    bias: np.ndarray = None    # [out] or None
    kind: str = field(default="conv2d", init=False)

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=np.float32)
        if w.ndim != 4 or w.shape[0] != self.out_channels or w.shape[2] != self.kernel or w.shape[3] != self.kernel:
            raise ShapeError(
                f"conv weight shape {w.shape} does not match out={self.out_channels}, k={self.kernel}"
            )
        object.__setattr__(self, "weight", w)
        if self.bias is not None:
            b = np.asarray(self.bias, dtype=np.float32)
            if b.shape != (self.out_channels,):
                raise ShapeError(f"conv bias shape {b.shape} does not match out={self.out_channels}")
            object.__setattr__(self, "bias", b)
        if self.kernel < 1 or self.stride < 1 or self.padding < 0:
            raise ShapeError("conv kernel/stride must be >= 1 and padding >= 0")


@dataclass(frozen=True)
class BatchNormSpec:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    eps: float = 1e-5
    kind: str = field(default="batchnorm", init=False)

    def __post_init__(self):
        arrays = {}
        lengths = set()
        for name in ("gamma", "beta", "running_mean", "running_var"):
            a = np.asarray(getattr(self, name), dtype=np.float32)
            if a.ndim != 1:
                raise ShapeError(f"batchnorm {name} must be rank-1, got shape {a.shape}")
            lengths.add(a.shape[0])
            arrays[name] = a
        if len(lengths) != 1:
            raise ShapeError("batchnorm parameter lengths differ")
        if np.any(arrays["running_var"] < 0):
            raise ShapeError("batchnorm running variance must be >= 0")
        for name, a in arrays.items():
            object.__setattr__(self, name, a)

    @property
    def channels(self) -> int:
        return self.gamma.shape[0]


@dataclass(frozen=True)
class ReluSpec:
    kind: str = field(default="relu", init=False)


@dataclass(frozen=True)
class MaxPoolSpec:
    window: int
    stride: int
    kind: str = field(default="maxpool", init=False)

    def __post_init__(self):
        if self.window < 1 or self.stride < 1:
            raise ShapeError("maxpool window/stride must be >= 1")


@dataclass(frozen=True)
class GlobalAvgPoolSpec:
    kind: str = field(default="avgpool-global", init=False)


@dataclass(frozen=True)
class LinearSpec:
    weight: np.ndarray  # [K, D]
    bias: np.ndarray    # [K] or None

    kind: str = field(default="linear", init=False)

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=np.float32)
        if w.ndim != 2:
            raise ShapeError(f"linear weight must be rank-2, got shape {w.shape}")
        object.__setattr__(self, "weight", w)
        if self.bias is not None:
            b = np.asarray(self.bias, dtype=np.float32)
            if b.shape != (w.shape[0],):
                raise ShapeError(f"linear bias shape {b.shape} does not match {w.shape[0]} rows")
            object.__setattr__(self, "bias", b)


@dataclass(frozen=True)
class FlattenSpec:
    kind: str = field(default="flatten", init=False)


LayerSpec = (
    ConvSpec | BatchNormSpec | ReluSpec | MaxPoolSpec | GlobalAvgPoolSpec | LinearSpec | FlattenSpec
)


def conv2d(x: np.ndarray, spec: ConvSpec) -> np.ndarray:
    """Cross-correlation with zero padding (no kernel flip)."""
    if x.ndim != 3:
        raise ShapeError(f"conv2d expects C x H x W input, got shape {x.shape}")
    c_in, h, w = x.shape
    if spec.weight.shape[1] != c_in:
        raise ShapeError(f"conv2d weight expects {spec.weight.shape[1]} input channels, got {c_in}")
    k, s, p = spec.kernel, spec.stride, spec.padding
    if h + 2 * p < k or w + 2 * p < k:
        raise ShapeError(f"conv2d input {h}x{w} smaller than kernel {k} after padding {p}")
    h_out = (h + 2 * p - k) // s + 1
    w_out = (w + 2 * p - k) // s + 1

    xp = np.pad(x, ((0, 0), (p, p), (p, p))).astype(np.float64)
    cols = np.empty((c_in, k, k, h_out, w_out), dtype=np.float64)
    for i in range(k):
        for j in range(k):
            cols[:, i, j] = xp[:, i : i + s * h_out : s, j : j + s * w_out : s]
    w2 = spec.weight.reshape(spec.out_channels, -1).astype(np.float64)
    out = w2 @ cols.reshape(c_in * k * k, h_out * w_out)
    if spec.bias is not None:
        out += spec.bias.astype(np.float64)[:, None]
    return out.reshape(spec.out_channels, h_out, w_out).astype(np.float32)


def batchnorm_infer(x: np.ndarray, spec: BatchNormSpec) -> np.ndarray:
    """Per-channel standardization with stored statistics, then affine scale/shift."""
    if x.ndim != 3:
        raise ShapeError(f"batchnorm expects C x H x W input, got shape {x.shape}")
    if x.shape[0] != spec.channels:
        raise ShapeError(f"batchnorm has {spec.channels} channels, input has {x.shape[0]}")
    g = spec.gamma.astype(np.float64)[:, None, None]
    b = spec.beta.astype(np.float64)[:, None, None]
    m = spec.running_mean.astype(np.float64)[:, None, None]
    v = spec.running_var.astype(np.float64)[:, None, None]
    y = g * (x.astype(np.float64) - m) / np.sqrt(v + spec.eps) + b
    return y.astype(np.float32)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, np.float32(0.0))


def maxpool(x: np.ndarray, spec: MaxPoolSpec) -> np.ndarray:
    """Max over valid windows only; windows never cover padding."""
    if x.ndim != 3:
        raise ShapeError(f"maxpool expects C x H x W input, got shape {x.shape}")
    c, h, w = x.shape
    k, s = spec.window, spec.stride
    if h < k or w < k:
        raise ShapeError(f"maxpool input {h}x{w} smaller than window {k}")
    h_out = (h - k) // s + 1
    w_out = (w - k) // s + 1
    out = np.full((c, h_out, w_out), -np.inf, dtype=np.float32)
    for i in range(k):
        for j in range(k):
            np.maximum(out, x[:, i : i + s * h_out : s, j : j + s * w_out : s], out=out)
    return out


def global_avgpool(x: np.ndarray) -> np.ndarray:
    if x.ndim != 3:
        raise ShapeError(f"avgpool-global expects C x H x W input, got shape {x.shape}")
    return x.astype(np.float64).mean(axis=(1, 2)).astype(np.float32)[:, None, None]


def flatten(x: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(x).reshape(-1)


def linear(x: np.ndarray, spec: LinearSpec) -> np.ndarray:
    if x.ndim != 1:
        raise ShapeError(f"linear expects a rank-1 vector, got shape {x.shape}")
    if x.shape[0] != spec.weight.shape[1]:
        raise ShapeError(
            f"linear weight expects {spec.weight.shape[1]} features, got {x.shape[0]}"
        )
    out = spec.weight.astype(np.float64) @ x.astype(np.float64)
    if spec.bias is not None:
        out += spec.bias.astype(np.float64)
    return out.astype(np.float32)


def apply_layer(x: np.ndarray, spec) -> np.ndarray:
    if isinstance(spec, ConvSpec):
        return conv2d(x, spec)
    if isinstance(spec, BatchNormSpec):
        return batchnorm_infer(x, spec)
    if isinstance(spec, ReluSpec):
        return relu(x)
    if isinstance(spec, MaxPoolSpec):
        return maxpool(x, spec)
    if isinstance(spec, GlobalAvgPoolSpec):
        return global_avgpool(x)
    if isinstance(spec, FlattenSpec):
        return flatten(x)
    if isinstance(spec, LinearSpec):
        return linear(x, spec)
    raise ShapeError(f"unknown layer spec {type(spec).__name__}")


def layer_out_shape(in_shape: tuple[int, ...], spec) -> tuple[int, ...]:
    """Shape algebra for one layer; raises ShapeError exactly when apply_layer would."""
    if isinstance(spec, ConvSpec):
        c, h, w = in_shape
        if spec.weight.shape[1] != c:
            raise ShapeError(f"conv2d weight expects {spec.weight.shape[1]} input channels, got {c}")
        k, s, p = spec.kernel, spec.stride, spec.padding
        if h + 2 * p < k or w + 2 * p < k:
            raise ShapeError(f"conv2d input {h}x{w} smaller than kernel {k} after padding {p}")
        return (spec.out_channels, (h + 2 * p - k) // s + 1, (w + 2 * p - k) // s + 1)
    if isinstance(spec, BatchNormSpec):
        if in_shape[0] != spec.channels:
            raise ShapeError(f"batchnorm has {spec.channels} channels, input has {in_shape[0]}")
        return in_shape
    if isinstance(spec, ReluSpec):
        return in_shape
    if isinstance(spec, MaxPoolSpec):
        c, h, w = in_shape
        k, s = spec.window, spec.stride
        if h < k or w < k:
            raise ShapeError(f"maxpool input {h}x{w} smaller than window {k}")
        return (c, (h - k) // s + 1, (w - k) // s + 1)
    if isinstance(spec, GlobalAvgPoolSpec):
        return (in_shape[0], 1, 1)
    if isinstance(spec, FlattenSpec):
        return (int(np.prod(in_shape)),)
    if isinstance(spec, LinearSpec):
        if len(in_shape) != 1 or in_shape[0] != spec.weight.shape[1]:
            raise ShapeError(
                f"linear weight expects ({spec.weight.shape[1]},) input, got {in_shape}"
            )
        return (spec.weight.shape[0],)
    raise ShapeError(f"unknown layer spec {type(spec).__name__}")
