"""End-to-end detection pipeline: select, calibrate, score, evaluate.

Stages are plain functions so the service and CLI reuse them; ``run_pipeline``
chains them, writes each stage's JSON output, and removes partial outputs when
a stage fails. All randomness derives from one seed through named substreams,
so identical configs reproduce identical output bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import EngineError, InputError, StageError
from .featurenorm import feature_norm
from .jigsaw import JigsawConfig, make_jigsaw
from .metrics import evaluate_score_set
from .micronet import ModelSpec, forward_with_taps, load_model
from .scoring import (
    DEFAULT_REACT_PERCENTILE,
    DetectorConfig,
    ScoreSet,
    calibrate_threshold,
    compute_react_clip,
    score_forward,
)
from .seeding import substream_seed
from .selection import SelectionReport, select_block, subsample_indices
from .tensorio import Manifest, load_manifest, read_tensor, write_tensor


@dataclass(frozen=True)
class RunConfig:
    model_dir: str
    manifest_path: str
    method: str
    out_dir: str
    seed: int = 0
    target_tpr: float = 0.95
    max_samples: int | None = None
    temperature: float | None = None
    clip_percentile: float | None = None

    def to_dict(self) -> dict:
        return {
            "model": Path(self.model_dir).name,
            "manifest": Path(self.manifest_path).name,
            "method": self.method,
            "seed": self.seed,
            "target_tpr": self.target_tpr,
            "max_samples": self.max_samples,
            "temperature": self.temperature,
            "clip_percentile": self.clip_percentile,
        }


def write_json(doc: dict, path: Path) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n")


def validate_manifest_sets(manifest: Manifest) -> None:
    if not manifest.id_train:
        raise InputError("manifest set 'id_train' is empty")
    if not manifest.id_test:
        raise InputError("manifest set 'id_test' is empty")
    for name, paths in manifest.ood_sets.items():
        if not paths:
            raise InputError(f"manifest OOD set '{name}' is empty")


def _load_samples(paths) -> list[np.ndarray]:
    return [read_tensor(p) for p in paths]


def stage_select(
    model: ModelSpec,
    manifest: Manifest,
    seed: int = 0,
    max_samples: int | None = None,
) -> SelectionReport:
    indices = subsample_indices(
        len(manifest.id_train), max_samples, substream_seed(seed, "selection")
    )
    config = JigsawConfig(seed=substream_seed(seed, "jigsaw"))
    samples = ((i, read_tensor(manifest.id_train[i])) for i in indices)
    return select_block(model, samples, config)


def _score_paths(model: ModelSpec, paths, detector: DetectorConfig) -> list[float]:
    return [score_forward(forward_with_taps(model, read_tensor(p)), detector, model) for p in paths]


def stage_calibrate(
    model: ModelSpec,
    manifest: Manifest,
    method: str,
    selected_block: str | None = None,
    temperature: float | None = None,
    clip_percentile: float | None = None,
    target_tpr: float = 0.95,
) -> DetectorConfig:
    """Resolve method parameters on id_train and calibrate the threshold there."""
    react_clip = None
    if method == "energy_react":
        pct = DEFAULT_REACT_PERCENTILE if clip_percentile is None else clip_percentile
        penultimates = [
            forward_with_taps(model, x).penultimate for x in _load_samples(manifest.id_train)
        ]
        react_clip = compute_react_clip(penultimates, pct)
    detector = DetectorConfig(
        method=method,
        selected_block=selected_block,
        temperature=temperature,
        react_clip=react_clip,
    )
    train_scores = _score_paths(model, manifest.id_train, detector)
    gamma = calibrate_threshold(train_scores, target_tpr)
    return DetectorConfig(
        method=method,
        selected_block=selected_block,
        threshold=gamma,
        temperature=temperature,
        react_clip=react_clip,
    )


def stage_score(model: ModelSpec, manifest: Manifest, detector: DetectorConfig) -> ScoreSet:
    return ScoreSet(
        id_scores=_score_paths(model, manifest.id_test, detector),
        ood_scores={
            name: _score_paths(model, paths, detector)
            for name, paths in manifest.ood_sets.items()
        },
        method=detector.method,
    )


def run_pipeline(config: RunConfig) -> dict:
    """Execute every stage, writing outputs under config.out_dir.

    Returns the run summary. Any stage failure removes the files written so
    far and surfaces as StageError naming the stage.
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(doc: dict, name: str) -> None:
        path = out_dir / name
        write_json(doc, path)
        written.append(path)

    stage = "load"
    try:
        model = load_model(config.model_dir)
        manifest = load_manifest(config.manifest_path)
        validate_manifest_sets(manifest)

        selected_block = None
        selection_report = None
        if config.method == "featurenorm":
            stage = "select"
            selection_report = stage_select(model, manifest, config.seed, config.max_samples)
            selected_block = selection_report.selected
            emit(selection_report.to_dict(), "selection_report.json")

        stage = "calibrate"
        detector = stage_calibrate(
            model,
            manifest,
            config.method,
            selected_block=selected_block,
            temperature=config.temperature,
            clip_percentile=config.clip_percentile,
            target_tpr=config.target_tpr,
        )
        emit(detector.to_dict(), "detector.json")

        stage = "score"
        scores = stage_score(model, manifest, detector)
        emit(scores.to_dict(), "scores.json")

        stage = "evaluate"
        evaluation = evaluate_score_set(scores, config.target_tpr)
        emit(evaluation, "eval.json")

        stage = "summary"
        summary = {
            "engine": "oodnorm",
            "version": __version__,
            "config": config.to_dict(),
            "selected_block": selected_block,
            "threshold": detector.threshold,
            "counts": {
                "id_train": len(manifest.id_train),
                "id_test": len(manifest.id_test),
                "ood_sets": {k: len(v) for k, v in manifest.ood_sets.items()},
            },
            "skipped_samples": selection_report.skipped_samples if selection_report else None,
            "outputs": [p.name for p in written] + ["run_summary.json"],
        }
        emit(summary, "run_summary.json")
        return summary
    except EngineError as exc:
        for path in written:
            path.unlink(missing_ok=True)
        raise StageError(stage, exc) from exc


def emit_jigsaws(inputs, out_dir, seed: int = 0) -> list[str]:
    """Write the shuffled counterpart of each input tensor for inspection."""
    if not inputs:
        raise InputError("no input tensors given")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = JigsawConfig(seed=substream_seed(seed, "jigsaw"))
    paths = []
    for index, src in enumerate(inputs):
        src = Path(src)
        shuffled = make_jigsaw(read_tensor(src), config, index)
        dst = out / f"{src.stem}.jigsaw.npy"
        write_tensor(shuffled, dst)
        paths.append(str(dst))
    return paths


def forward_file(model: ModelSpec, input_path, include_feature_norms: bool = True) -> dict:
    """Single-sample forward pass summary for inspection and cross-checks."""
    result = forward_with_taps(model, read_tensor(input_path))
    doc = {
        "logits": [float(v) for v in result.logits],
        "penultimate_l2": float(np.linalg.norm(result.penultimate.astype(np.float64))),
    }
    if include_feature_norms:
        doc["feature_norms"] = {
            name: feature_norm(tap).mean for name, tap in result.taps.items()
        }
        doc["tap_shapes"] = {name: list(tap.shape) for name, tap in result.taps.items()}
    return doc
