"""Model description, loading, and the tapped forward pass.

A model is an ordered list of named blocks followed by a head that ends in a
single linear layer. Each block's final output (post-activation, and for
residual blocks post-addition) is recorded as that block's tap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ShapeError
from ..tensorio import read_tensor
from .layers import (
    BatchNormSpec,
    ConvSpec,
    FlattenSpec,
    GlobalAvgPoolSpec,
    LinearSpec,
    MaxPoolSpec,
    ReluSpec,
    apply_layer,
    layer_out_shape,
)

ORDER_STYLES = ("Conv-BN-ReLU", "BN-ReLU-Conv")


@dataclass(frozen=True)
class BlockSpec:
    name: str
    layers: tuple
    residual: bool = False
    downsample: tuple = ()  # optional skip-path layers, usually a 1x1 conv (+ bn)
    order_style: str = "Conv-BN-ReLU"

    def __post_init__(self):
        if not self.layers:
            raise ShapeError(f"block '{self.name}' has no layers")
        if self.order_style not in ORDER_STYLES:
            raise ShapeError(f"block '{self.name}': unknown order_style {self.order_style!r}")
        if self.downsample and not self.residual:
            raise ShapeError(f"block '{self.name}': downsample layers need residual=True")


@dataclass(frozen=True)
class ModelSpec:
    input_shape: tuple[int, int, int]
    blocks: tuple[BlockSpec, ...]
    head: tuple
    block_shapes: dict = field(default_factory=dict)  # name -> tap shape, filled at validation

    def __post_init__(self):
        if not self.blocks:
            raise ShapeError("model has no blocks")
        names = [b.name for b in self.blocks]
        if len(set(names)) != len(names):
            raise ShapeError("block names are not unique")
        linears = [l for l in self.head if isinstance(l, LinearSpec)]
        if len(linears) != 1 or not isinstance(self.head[-1], LinearSpec):
            raise ShapeError("head must contain exactly one linear layer, in final position")
        self.block_shapes.update(_infer_shapes(self))

    @property
    def block_names(self) -> list[str]:
        return [b.name for b in self.blocks]

    @property
    def head_linear(self) -> LinearSpec:
        return self.head[-1]

    @property
    def num_classes(self) -> int:
        return self.head_linear.weight.shape[0]


@dataclass(frozen=True)
class ForwardResult:
    logits: np.ndarray               # rank-1, length K
    taps: dict                       # block name -> C x H x W feature map
    penultimate: np.ndarray          # flattened feature entering the final linear


def _block_out_shape(block: BlockSpec, in_shape) -> tuple:
    shape = in_shape
    for idx, layer in enumerate(block.layers):
        try:
            shape = layer_out_shape(shape, layer)
        except ShapeError as exc:
            raise ShapeError(f"block '{block.name}' layer {idx} ({layer.kind}): {exc}") from exc
    if block.residual:
        skip = in_shape
        for idx, layer in enumerate(block.downsample):
            try:
                skip = layer_out_shape(skip, layer)
            except ShapeError as exc:
                raise ShapeError(
                    f"block '{block.name}' downsample layer {idx} ({layer.kind}): {exc}"
                ) from exc
        if skip != shape:
            raise ShapeError(
                f"block '{block.name}': residual branch shape {shape} != skip shape {skip}"
            )
    return shape


def _infer_shapes(model: ModelSpec) -> dict:
    """Walk the whole model once; raises ShapeError naming the offending layer."""
    shapes = {}
    shape = model.input_shape
    for block in model.blocks:
        shape = _block_out_shape(block, shape)
        shapes[block.name] = shape
    for idx, layer in enumerate(model.head):
        try:
            shape = layer_out_shape(shape, layer)
        except ShapeError as exc:
            raise ShapeError(f"head layer {idx} ({layer.kind}): {exc}") from exc
    return shapes


def _run_layers(x, layers, where: str):
    for idx, layer in enumerate(layers):
        try:
            x = apply_layer(x, layer)
        except ShapeError as exc:
            raise ShapeError(f"{where} layer {idx} ({layer.kind}): {exc}") from exc
    return x


def forward_with_taps(model: ModelSpec, image: np.ndarray) -> ForwardResult:
    """Run all blocks and the head, recording every block's output feature map."""
    x = np.asarray(image, dtype=np.float32)
    if tuple(x.shape) != tuple(model.input_shape):
        raise ShapeError(f"input shape {x.shape} != model input shape {model.input_shape}")
    taps = {}
    for block in model.blocks:
        branch = _run_layers(x, block.layers, f"block '{block.name}'")
        if block.residual:
            skip = _run_layers(x, block.downsample, f"block '{block.name}' downsample")
            if skip.shape != branch.shape:
                raise ShapeError(
                    f"block '{block.name}': residual branch shape {branch.shape} != skip {skip.shape}"
                )
            x = branch + skip
        else:
            x = branch
        taps[block.name] = x

    penultimate = x
    for idx, layer in enumerate(model.head):
        if isinstance(layer, LinearSpec):
            penultimate = x
        try:
            x = apply_layer(x, layer)
        except ShapeError as exc:
            raise ShapeError(f"head layer {idx} ({layer.kind}): {exc}") from exc
    return ForwardResult(logits=x, taps=taps, penultimate=penultimate)


def _load_layer(doc: dict, base: Path):
    kind = doc.get("kind")
    if kind == "conv2d":
        weight = read_tensor(base / doc["weight_file"])
        bias = read_tensor(base / doc["bias_file"]) if doc.get("bias_file") else None
        return ConvSpec(
            out_channels=int(doc["out_channels"]),
            kernel=int(doc["kernel"]),
            stride=int(doc.get("stride", 1)),
            padding=int(doc.get("padding", 0)),
            weight=weight,
            bias=bias,
        )
    if kind == "batchnorm":
        return BatchNormSpec(
            gamma=read_tensor(base / doc["gamma_file"]),
            beta=read_tensor(base / doc["beta_file"]),
            running_mean=read_tensor(base / doc["mean_file"]),
            running_var=read_tensor(base / doc["var_file"]),
            eps=float(doc.get("eps", 1e-5)),
        )
    if kind == "relu":
        return ReluSpec()
    if kind == "maxpool":
        return MaxPoolSpec(window=int(doc["window"]), stride=int(doc["stride"]))
    if kind == "avgpool-global":
        return GlobalAvgPoolSpec()
    if kind == "flatten":
        return FlattenSpec()
    if kind == "linear":
        weight = read_tensor(base / doc["weight_file"])
        bias = read_tensor(base / doc["bias_file"]) if doc.get("bias_file") else None
        return LinearSpec(weight=weight, bias=bias)
    raise ShapeError(f"unknown layer kind {kind!r}")


def load_model(model_dir) -> ModelSpec:
    """Load a model directory (model.json plus one tensor file per parameter)."""
    base = Path(model_dir)
    doc = json.loads((base / "model.json").read_text())
    input_shape = tuple(int(v) for v in doc["input_shape"])
    if len(input_shape) != 3:
        raise ShapeError(f"input_shape must be [C, H, W], got {doc['input_shape']}")
    blocks = []
    for bdoc in doc["blocks"]:
        blocks.append(
            BlockSpec(
                name=str(bdoc["name"]),
                layers=tuple(_load_layer(l, base) for l in bdoc["layers"]),
                residual=bool(bdoc.get("residual", False)),
                downsample=tuple(_load_layer(l, base) for l in bdoc.get("downsample", [])),
                order_style=str(bdoc.get("order_style", "Conv-BN-ReLU")),
            )
        )
    head = tuple(_load_layer(l, base) for l in doc["head"])
    return ModelSpec(input_shape=input_shape, blocks=tuple(blocks), head=head)
