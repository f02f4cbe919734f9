import json
from pathlib import Path

import numpy as np
import pytest

from oodnorm.errors import InputError, StageError
from oodnorm.micronet import forward_with_taps, load_model
from oodnorm.pipeline import (
    RunConfig,
    emit_jigsaws,
    forward_file,
    run_pipeline,
    stage_score,
)
from oodnorm.scoring import DetectorConfig
from oodnorm.tensorio import load_manifest, read_tensor

FIXTURES = Path(__file__).resolve().parent / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "golden"
MANIFEST = FIXTURES / "data" / "manifest.json"

GOLDEN_FILES = [
    "selection_report.json",
    "detector.json",
    "scores.json",
    "eval.json",
    "run_summary.json",
]


def featurenorm_config(out_dir, model="model_cbr", seed=7):
    return RunConfig(
        model_dir=str(FIXTURES / model),
        manifest_path=str(MANIFEST),
        method="featurenorm",
        out_dir=str(out_dir),
        seed=seed,
    )


def test_golden_pipeline_bitwise(tmp_path):
    run_pipeline(featurenorm_config(tmp_path / "run"))
    for name in GOLDEN_FILES:
        fresh = (tmp_path / "run" / name).read_bytes()
        committed = (GOLDEN / "run_featurenorm" / name).read_bytes()
        assert fresh == committed, f"{name} deviates from the committed golden"


def test_probe_logits_golden_zero_ulp():
    model = load_model(FIXTURES / "model_cbr")
    probe = read_tensor(FIXTURES / "data" / "id_test" / "img_000.npy")
    first = forward_with_taps(model, probe).logits
    second = forward_with_taps(model, probe).logits
    assert first.tobytes() == second.tobytes()
    committed = read_tensor(GOLDEN / "probe_logits.npy")
    assert first.tobytes() == committed.tobytes()


def test_idempotent_rerun(tmp_path):
    run_pipeline(featurenorm_config(tmp_path / "a"))
    run_pipeline(featurenorm_config(tmp_path / "b"))
    for name in GOLDEN_FILES:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_msp_method_skips_selection(tmp_path):
    config = RunConfig(
        model_dir=str(FIXTURES / "model_cbr"),
        manifest_path=str(MANIFEST),
        method="msp",
        out_dir=str(tmp_path),
        seed=7,
    )
    summary = run_pipeline(config)
    assert summary["selected_block"] is None
    assert not (tmp_path / "selection_report.json").exists()
    assert (tmp_path / "eval.json").exists()
    doc = json.loads((tmp_path / "eval.json").read_text())
    assert set(doc) == {"noise", "shift", "average"}


@pytest.mark.parametrize("method", ["energy", "msp_temp", "energy_react"])
def test_other_methods_run(tmp_path, method):
    config = RunConfig(
        model_dir=str(FIXTURES / "model_cbr"),
        manifest_path=str(MANIFEST),
        method=method,
        out_dir=str(tmp_path),
        seed=7,
    )
    summary = run_pipeline(config)
    detector = json.loads((tmp_path / "detector.json").read_text())
    assert detector["method"] == method
    assert summary["threshold"] is not None
    if method == "energy_react":
        assert detector["react_clip"] > 0


@pytest.mark.parametrize("model", ["model_cbr", "model_brc"])
def test_block_order_variants_run_full_pipeline(tmp_path, model):
    summary = run_pipeline(featurenorm_config(tmp_path, model=model))
    assert summary["selected_block"] in {"block1", "block2", "block3"}
    assert (tmp_path / "eval.json").exists()


def test_empty_ood_set_rejected(tmp_path):
    doc = json.loads(MANIFEST.read_text())
    doc["ood_sets"]["hollow"] = []
    # keep relative paths valid from the new location
    for key in ("id_train", "id_test"):
        doc[key] = [str(FIXTURES / "data" / p) for p in doc[key]]
    doc["ood_sets"]["noise"] = [str(FIXTURES / "data" / p) for p in doc["ood_sets"]["noise"]]
    doc["ood_sets"]["shift"] = [str(FIXTURES / "data" / p) for p in doc["ood_sets"]["shift"]]
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps(doc))
    config = RunConfig(
        model_dir=str(FIXTURES / "model_cbr"),
        manifest_path=str(manifest),
        method="msp",
        out_dir=str(tmp_path / "out"),
        seed=7,
    )
    with pytest.raises(StageError) as err:
        run_pipeline(config)
    assert err.value.stage == "load"
    assert isinstance(err.value.cause, InputError)
    assert "hollow" in str(err.value.cause)


def test_failed_stage_removes_partial_outputs(tmp_path):
    config = RunConfig(
        model_dir=str(FIXTURES / "model_cbr"),
        manifest_path=str(MANIFEST),
        method="featurenorm",
        out_dir=str(tmp_path / "out"),
        seed=7,
        target_tpr=0.0,  # selection succeeds and writes, calibration then rejects
    )
    with pytest.raises(StageError) as err:
        run_pipeline(config)
    assert err.value.stage == "calibrate"
    assert list((tmp_path / "out").glob("*")) == []


def test_stage_isolation_score_matches_pipeline(tmp_path):
    run_pipeline(featurenorm_config(tmp_path / "run"))
    detector = DetectorConfig.from_dict(
        json.loads((tmp_path / "run" / "detector.json").read_text())
    )
    model = load_model(FIXTURES / "model_cbr")
    manifest = load_manifest(MANIFEST)
    standalone = stage_score(model, manifest, detector)
    assert standalone.to_dict() == json.loads((tmp_path / "run" / "scores.json").read_text())


def test_emit_jigsaws(tmp_path):
    manifest = load_manifest(MANIFEST)
    outputs = emit_jigsaws(manifest.id_train[:3], tmp_path, seed=7)
    assert len(outputs) == 3
    for src, dst in zip(manifest.id_train[:3], outputs):
        original = read_tensor(src)
        shuffled = read_tensor(dst)
        assert shuffled.shape == original.shape
        assert not np.array_equal(shuffled, original)
        # 12x12 is grid-divisible, so the shuffle preserves the pixel multiset
        assert sorted(shuffled.ravel().tolist()) == sorted(original.ravel().tolist())
    with pytest.raises(InputError):
        emit_jigsaws([], tmp_path, seed=7)


def test_forward_file_reports_norms():
    model = load_model(FIXTURES / "model_cbr")
    doc = forward_file(model, FIXTURES / "data" / "id_test" / "img_000.npy")
    assert len(doc["logits"]) == 4
    assert set(doc["feature_norms"]) == {"block1", "block2", "block3"}
    assert doc["tap_shapes"]["block3"] == [16, 3, 3]
    assert doc["penultimate_l2"] > 0
