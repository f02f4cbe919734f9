from .layers import (
    BatchNormSpec,
    ConvSpec,
    FlattenSpec,
    GlobalAvgPoolSpec,
    LinearSpec,
    MaxPoolSpec,
    ReluSpec,
    apply_layer,
    batchnorm_infer,
    conv2d,
    layer_out_shape,
)
from .model import (
    BlockSpec,
    ForwardResult,
    ModelSpec,
    forward_with_taps,
    load_model,
)

__all__ = [
    "ConvSpec",
    "BatchNormSpec",
    "ReluSpec",
    "MaxPoolSpec",
    "GlobalAvgPoolSpec",
    "LinearSpec",
    "FlattenSpec",
    "conv2d",
    "batchnorm_infer",
    "apply_layer",
    "layer_out_shape",
    "BlockSpec",
    "ModelSpec",
    "ForwardResult",
    "forward_with_taps",
    "load_model",
]
