"""Rectified feature-map norms and the ID/pseudo-OOD norm ratio.

The per-channel score is the Frobenius norm of the ReLU-rectified channel
slice; the detection score for a block is the arithmetic mean over channels.
Sums of squares accumulate in float64 regardless of the input dtype.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRatioError, ShapeError


@dataclass(frozen=True)
class FeatureNormResult:
    per_channel: np.ndarray  # float64, one entry per channel, all >= 0
    mean: float


def channel_norm(z_i) -> float:
    """Rectified Frobenius norm of one channel slice (H x W or 1 x H x W)."""
    a = np.asarray(z_i)
    if a.ndim == 3 and a.shape[0] == 1:
        a = a[0]
    if a.ndim != 2:
        raise ShapeError(f"channel_norm expects an H x W slice, got shape {a.shape}")
    r = np.maximum(a, 0.0).astype(np.float64)
    return float(np.sqrt(np.sum(r * r)))


def feature_norm(z) -> FeatureNormResult:
    """Per-channel rectified norms of an M x H x W feature map and their mean."""
    a = np.asarray(z)
    if a.ndim != 3 or a.shape[0] < 1:
        raise ShapeError(f"feature_norm expects an M x H x W map, got shape {a.shape}")
    r = np.maximum(a, 0.0).astype(np.float64)
    per_channel = np.sqrt(np.sum(r * r, axis=(1, 2)))
    return FeatureNormResult(per_channel=per_channel, mean=float(per_channel.mean()))


def norm_ratio(norm_id: float, norm_pseudo: float, block=None, sample=None) -> float:
    """Ratio of an ID norm to a pseudo-OOD norm for the same block.

    A zero pseudo-OOD norm has no defined ratio; raising beats silently
    producing inf, and callers decide whether to skip the sample.
    """
    if norm_pseudo == 0.0:
        raise DegenerateRatioError(
            f"pseudo-OOD norm is zero (block={block!r}, sample={sample!r})",
            block=block,
            sample=sample,
        )
    return norm_id / norm_pseudo
