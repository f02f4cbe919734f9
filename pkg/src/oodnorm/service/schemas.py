"""Request/response models for the detection service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    version: str


class SelectBlockRequest(BaseModel):
    model_dir: str
    manifest: str
    seed: int = 0
    max_samples: int | None = None


class SelectionReportResponse(BaseModel):
    per_block: dict[str, float]
    selected: str
    skipped_samples: dict[str, int]
    sample_count: int


class DetectorConfigModel(BaseModel):
    method: str
    selected_block: str | None = None
    threshold: float | None = None
    temperature: float | None = None
    react_clip: float | None = None


class CalibrateRequest(BaseModel):
    model_dir: str
    manifest: str
    method: str
    block: str | None = None
    temperature: float | None = None
    clip_percentile: float | None = None
    target_tpr: float = 0.95


class ScoreRequest(BaseModel):
    model_dir: str
    manifest: str
    detector: DetectorConfigModel


class ScoreSetModel(BaseModel):
    id_scores: list[float]
    ood_scores: dict[str, list[float]]
    method: str
    higher_is_id: bool = True


class EvaluateRequest(BaseModel):
    scores: ScoreSetModel
    target_tpr: float = 0.95


class RunRequest(BaseModel):
    model_dir: str
    manifest: str
    method: str
    out_dir: str
    seed: int = 0
    target_tpr: float = 0.95
    max_samples: int | None = None
    temperature: float | None = None
    clip_percentile: float | None = None


class MakeJigsawRequest(BaseModel):
    inputs: list[str] = Field(default_factory=list)
    manifest: str | None = None
    out_dir: str
    seed: int = 0
    max_samples: int | None = None


class MakeJigsawResponse(BaseModel):
    outputs: list[str]


class ForwardRequest(BaseModel):
    model_dir: str
    input: str
    include_feature_norms: bool = True


class ForwardResponse(BaseModel):
    logits: list[float]
    penultimate_l2: float
    feature_norms: dict[str, float] | None = None
    tap_shapes: dict[str, list[int]] | None = None
