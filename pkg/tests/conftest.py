import numpy as np
import pytest

from oodnorm.micronet import (
    BlockSpec,
    ConvSpec,
    FlattenSpec,
    GlobalAvgPoolSpec,
    LinearSpec,
    ModelSpec,
    ReluSpec,
)


def identity_conv(channels):
    w = np.zeros((channels, channels, 1, 1), dtype=np.float32)
    for c in range(channels):
        w[c, c, 0, 0] = 1.0
    return ConvSpec(out_channels=channels, kernel=1, weight=w)


@pytest.fixture
def single_block_model():
    """Pass-through block (1x1 identity conv + relu) with a flatten+linear head."""
    rng = np.random.default_rng(11)
    head_w = rng.standard_normal((3, 9)).astype(np.float32)
    block = BlockSpec(name="block1", layers=(identity_conv(1), ReluSpec()))
    head = (FlattenSpec(), LinearSpec(weight=head_w, bias=None))
    return ModelSpec(input_shape=(1, 3, 3), blocks=(block,), head=head)


def build_pattern_model():
    """Two-block model: pass-through block, then a straddle-pattern detector.

    Block "plain" copies its nonnegative input. Block "pattern" has one channel
    matched to a 2x2 bright square (only a full square clears the bias) and one
    low-gain background channel that keeps every norm positive.
    """
    detect_w = np.ones((1, 1, 2, 2), dtype=np.float32)
    background_w = np.full((1, 1, 2, 2), 0.05, dtype=np.float32)
    w = np.concatenate([detect_w, background_w], axis=0)
    b = np.array([-2.5, 0.1], dtype=np.float32)
    blocks = (
        BlockSpec(name="plain", layers=(identity_conv(1), ReluSpec())),
        BlockSpec(
            name="pattern",
            layers=(ConvSpec(out_channels=2, kernel=2, weight=w, bias=b), ReluSpec()),
        ),
    )
    rng = np.random.default_rng(21)
    head = (
        GlobalAvgPoolSpec(),
        FlattenSpec(),
        LinearSpec(
            weight=rng.standard_normal((2, 2)).astype(np.float32),
            bias=rng.standard_normal(2).astype(np.float32),
        ),
    )
    return ModelSpec(input_shape=(1, 9, 9), blocks=blocks, head=head)


def make_pattern_id_image(rng):
    """Nonnegative 1x9x9 image with two bright 2x2 squares straddling tile corners."""
    img = rng.uniform(0.0, 0.2, size=(1, 9, 9)).astype(np.float32)
    img[0, 2:4, 2:4] = 1.0
    img[0, 5:7, 5:7] = 1.0
    return img


def make_pattern_ood_image(rng):
    """Structure-free noise whose pixel energy matches the ID images."""
    amp = rng.uniform(0.50, 0.66)
    return rng.uniform(0.0, amp, size=(1, 9, 9)).astype(np.float32)


@pytest.fixture
def pattern_fixture():
    rng = np.random.default_rng(2024)
    model = build_pattern_model()
    id_images = [make_pattern_id_image(rng) for _ in range(24)]
    ood_images = [make_pattern_ood_image(rng) for _ in range(24)]
    return model, id_images, ood_images
