"""HTTP service wrapping the detection engine.

Endpoints mirror the pipeline stages. The service and its clients share a
filesystem: requests carry model-directory, manifest, and output paths, and
heavyweight artifacts (tensors, run outputs) stay on disk while responses
carry the JSON results. Loaded models are cached per directory.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..errors import EngineError, StageError
from ..micronet import ModelSpec, load_model
from ..pipeline import (
    RunConfig,
    emit_jigsaws,
    forward_file,
    run_pipeline,
    stage_calibrate,
    stage_score,
    stage_select,
    validate_manifest_sets,
)
from ..metrics import evaluate_score_set
from ..scoring import DetectorConfig, ScoreSet
from ..selection import subsample_indices
from ..seeding import substream_seed
from ..tensorio import load_manifest
from .schemas import (
    CalibrateRequest,
    DetectorConfigModel,
    EvaluateRequest,
    ForwardRequest,
    ForwardResponse,
    HealthResponse,
    MakeJigsawRequest,
    MakeJigsawResponse,
    RunRequest,
    ScoreRequest,
    ScoreSetModel,
    SelectBlockRequest,
    SelectionReportResponse,
)


class ModelCache:
    """Per-directory model cache invalidated when model.json changes on disk."""

    def __init__(self):
        self._cache: dict[str, tuple[float, ModelSpec]] = {}

    def get(self, model_dir: str) -> ModelSpec:
        key = str(Path(model_dir).resolve())
        mtime = (Path(key) / "model.json").stat().st_mtime
        hit = self._cache.get(key)
        if hit is None or hit[0] != mtime:
            self._cache[key] = (mtime, load_model(key))
        return self._cache[key][1]


def create_app() -> FastAPI:
    app = FastAPI(title="oodnorm", version=__version__)
    models = ModelCache()

    def _fail(exc: Exception) -> HTTPException:
        if isinstance(exc, StageError):
            return HTTPException(status_code=422, detail={"stage": exc.stage, "error": str(exc.cause)})
        if isinstance(exc, EngineError):
            return HTTPException(status_code=422, detail={"error": str(exc)})
        if isinstance(exc, (FileNotFoundError, OSError)):
            return HTTPException(status_code=404, detail={"error": str(exc)})
        raise exc

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/select-block", response_model=SelectionReportResponse)
    def select_block_endpoint(req: SelectBlockRequest) -> SelectionReportResponse:
        try:
            model = models.get(req.model_dir)
            manifest = load_manifest(req.manifest)
            report = stage_select(model, manifest, req.seed, req.max_samples)
        except (EngineError, OSError) as exc:
            raise _fail(exc) from exc
        return SelectionReportResponse(**report.to_dict())

    @app.post("/calibrate", response_model=DetectorConfigModel)
    def calibrate_endpoint(req: CalibrateRequest) -> DetectorConfigModel:
        try:
            model = models.get(req.model_dir)
            manifest = load_manifest(req.manifest)
            detector = stage_calibrate(
                model,
                manifest,
                req.method,
                selected_block=req.block,
                temperature=req.temperature,
                clip_percentile=req.clip_percentile,
                target_tpr=req.target_tpr,
            )
        except (EngineError, OSError) as exc:
            raise _fail(exc) from exc
        return DetectorConfigModel(**detector.to_dict())

    @app.post("/score", response_model=ScoreSetModel)
    def score_endpoint(req: ScoreRequest) -> ScoreSetModel:
        try:
            model = models.get(req.model_dir)
            manifest = load_manifest(req.manifest)
            validate_manifest_sets(manifest)
            detector = DetectorConfig.from_dict(req.detector.model_dump())
            scores = stage_score(model, manifest, detector)
        except (EngineError, OSError) as exc:
            raise _fail(exc) from exc
        return ScoreSetModel(**scores.to_dict())

    @app.post("/evaluate")
    def evaluate_endpoint(req: EvaluateRequest) -> dict:
        try:
            score_set = ScoreSet.from_dict(req.scores.model_dump())
            return evaluate_score_set(score_set, req.target_tpr)
        except (EngineError, OSError) as exc:
            raise _fail(exc) from exc

    @app.post("/run")
    def run_endpoint(req: RunRequest) -> dict:
        config = RunConfig(
            model_dir=req.model_dir,
            manifest_path=req.manifest,
            method=req.method,
            out_dir=req.out_dir,
            seed=req.seed,
            target_tpr=req.target_tpr,
            max_samples=req.max_samples,
            temperature=req.temperature,
            clip_percentile=req.clip_percentile,
        )
        try:
            return run_pipeline(config)
        except (EngineError, OSError) as exc:
            raise _fail(exc) from exc

    @app.post("/make-jigsaw", response_model=MakeJigsawResponse)
    def make_jigsaw_endpoint(req: MakeJigsawRequest) -> MakeJigsawResponse:
        try:
            inputs = list(req.inputs)
            if req.manifest:
                manifest = load_manifest(req.manifest)
                indices = subsample_indices(
                    len(manifest.id_train),
                    req.max_samples,
                    substream_seed(req.seed, "selection"),
                )
                inputs = [str(manifest.id_train[i]) for i in indices]
            outputs = emit_jigsaws(inputs, req.out_dir, req.seed)
        except (EngineError, OSError) as exc:
            raise _fail(exc) from exc
        return MakeJigsawResponse(outputs=outputs)

    @app.post("/forward", response_model=ForwardResponse)
    def forward_endpoint(req: ForwardRequest) -> ForwardResponse:
        try:
            model = models.get(req.model_dir)
            doc = forward_file(model, req.input, req.include_feature_norms)
        except (EngineError, OSError) as exc:
            raise _fail(exc) from exc
        return ForwardResponse(**doc)

    return app


app = create_app()
