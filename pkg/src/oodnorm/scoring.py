"""ID-ness scores, threshold calibration, and the thresholded detector.

All scores are oriented so that larger means more ID-like. The feature-norm
score reads the selected block's tap; the logit-based baselines (max softmax,
energy, temperature-scaled max softmax, clipped-feature energy) read the
classifier output. Softmax and log-sum-exp both use max-subtraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateRatioError, InputError
from .featurenorm import feature_norm
from .micronet import ForwardResult, ModelSpec
from .micronet.layers import linear as _linear_layer

METHODS = ("featurenorm", "msp", "energy", "msp_temp", "energy_react")

DEFAULT_MSP_TEMPERATURE = 1000.0
DEFAULT_REACT_PERCENTILE = 90.0


@dataclass(frozen=True)
class DetectorConfig:
    method: str
    selected_block: str | None = None
    threshold: float | None = None
    temperature: float | None = None
    react_clip: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown scoring method {self.method!r}")
        if self.method == "featurenorm" and not self.selected_block:
            raise ConfigError("featurenorm scoring needs a selected block")
        if self.temperature is not None and self.temperature <= 0:
            raise ConfigError(f"temperature must be > 0, got {self.temperature}")
        if self.react_clip is not None and self.react_clip <= 0:
            raise ConfigError(f"react clip must be > 0, got {self.react_clip}")

    @property
    def resolved_temperature(self) -> float:
        if self.temperature is not None:
            return self.temperature
        return DEFAULT_MSP_TEMPERATURE if self.method == "msp_temp" else 1.0

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "selected_block": self.selected_block,
            "threshold": self.threshold,
            "temperature": self.temperature,
            "react_clip": self.react_clip,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DetectorConfig":
        return cls(
            method=doc["method"],
            selected_block=doc.get("selected_block"),
            threshold=doc.get("threshold"),
            temperature=doc.get("temperature"),
            react_clip=doc.get("react_clip"),
        )


@dataclass(frozen=True)
class ScoreSet:
    id_scores: list
    ood_scores: dict
    method: str
    higher_is_id: bool = True

    def to_dict(self) -> dict:
        return {
            "id_scores": [float(s) for s in self.id_scores],
            "ood_scores": {k: [float(s) for s in v] for k, v in self.ood_scores.items()},
            "method": self.method,
            "higher_is_id": self.higher_is_id,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ScoreSet":
        scores = cls(
            id_scores=[float(s) for s in doc["id_scores"]],
            ood_scores={k: [float(s) for s in v] for k, v in doc["ood_scores"].items()},
            method=doc.get("method", "unknown"),
            higher_is_id=bool(doc.get("higher_is_id", True)),
        )
        pools = [scores.id_scores, *scores.ood_scores.values()]
        if any(not math.isfinite(s) for pool in pools for s in pool):
            raise InputError("score set contains non-finite values")
        return scores


def score_featurenorm(result: ForwardResult, block: str) -> float:
    if block not in result.taps:
        raise ConfigError(f"block {block!r} not among taps {sorted(result.taps)}")
    return feature_norm(result.taps[block]).mean


def score_msp(logits) -> float:
    v = np.asarray(logits, dtype=np.float64)
    shifted = v - v.max()
    return float(np.exp(shifted).max() / np.exp(shifted).sum())


def score_energy(logits, temperature: float = 1.0) -> float:
    v = np.asarray(logits, dtype=np.float64) / temperature
    m = v.max()
    return float(temperature * (m + np.log(np.exp(v - m).sum())))


def score_msp_temp(logits, temperature: float = DEFAULT_MSP_TEMPERATURE) -> float:
    return score_msp(np.asarray(logits, dtype=np.float64) / temperature)


def react_clip(feature_vec, clip: float) -> np.ndarray:
    return np.minimum(np.asarray(feature_vec), clip)


def norm_replaced_logits(logits, bias, last_norm: float, selected_norm: float) -> np.ndarray:
    """Rescale bias-free logits by the selected-block/last-block norm ratio."""
    if last_norm == 0.0:
        raise DegenerateRatioError("last-block feature norm is zero")
    v = np.asarray(logits, dtype=np.float64)
    b = np.zeros_like(v) if bias is None else np.asarray(bias, dtype=np.float64)
    if selected_norm == last_norm:
        return v
    return (v - b) * (selected_norm / last_norm) + b


def calibrate_threshold(id_scores, target_tpr: float = 0.95) -> float:
    """Largest cutoff keeping at least ceil(target_tpr * n) ID scores at or above it."""
    scores = np.asarray(id_scores, dtype=np.float64)
    if scores.size == 0:
        raise InputError("cannot calibrate a threshold on an empty score set")
    if not (0.0 < target_tpr <= 1.0):
        raise InputError(f"target TPR must be in (0, 1], got {target_tpr}")
    # The epsilon guards against 0.95 * n landing a hair above the intended integer.
    k = max(1, math.ceil(target_tpr * scores.size - 1e-9))
    return float(np.sort(scores)[::-1][k - 1])


def decide(score: float, gamma: float) -> str:
    return "ID" if score >= gamma else "OOD"


def score_forward(result: ForwardResult, config: DetectorConfig, model: ModelSpec = None) -> float:
    """Score one forward pass under the configured method."""
    if config.method == "featurenorm":
        return score_featurenorm(result, config.selected_block)
    if config.method == "msp":
        return score_msp(result.logits)
    if config.method == "energy":
        return score_energy(result.logits, config.resolved_temperature)
    if config.method == "msp_temp":
        return score_msp_temp(result.logits, config.resolved_temperature)
    if config.method == "energy_react":
        if config.react_clip is None:
            raise ConfigError("energy_react scoring needs a calibrated clip value")
        if model is None:
            raise ConfigError("energy_react scoring needs the model head")
        clipped = react_clip(result.penultimate, config.react_clip).astype(np.float32)
        logits = _linear_layer(clipped, model.head_linear)
        return score_energy(logits, config.resolved_temperature)
    raise ConfigError(f"unknown scoring method {config.method!r}")


def compute_react_clip(penultimates, percentile: float = DEFAULT_REACT_PERCENTILE) -> float:
    """Clip value from pooled ID penultimate activations at the given percentile."""
    pooled = np.concatenate([np.asarray(p, dtype=np.float64).ravel() for p in penultimates])
    if pooled.size == 0:
        raise InputError("cannot compute a clip value from zero activations")
    clip = float(np.percentile(pooled, percentile))
    if clip <= 0:
        raise ConfigError(f"computed clip value {clip} is not positive")
    return clip
