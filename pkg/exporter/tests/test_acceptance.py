"""Desk-scale acceptance: train, export, and drive the engine end to end.

The engine is exercised exclusively through its command-line surface; this
package never imports it.
"""

import json
import subprocess
import sys


def run_engine(*args):
    cmd = [sys.executable, "-m", "oodnorm.cli", *args]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    assert proc.returncode == 0, f"engine call failed: {proc.stderr}"
    return proc


def test_desk_scale_end_to_end(dataset_dir, trained_checkpoint, exported_model, tmp_path):
    _, train_report, train_seconds = trained_checkpoint
    assert train_seconds < 600.0, "training must stay desk-scale"
    assert train_report["train_accuracy"] > 0.80

    model_dir, _ = exported_model
    manifest = dataset_dir / "manifest.json"
    out_dir = tmp_path / "results"

    run_engine(
        "run",
        "--model", str(model_dir),
        "--manifest", str(manifest),
        "--method", "featurenorm",
        "--seed", "7",
        "--out-dir", str(out_dir),
    )

    evaluation = json.loads((out_dir / "eval.json").read_text())
    selected_auroc = evaluation["noise"]["auroc"]
    assert selected_auroc >= 0.90, f"selected-block AUROC {selected_auroc} below 0.90"

    # last-block comparison, scored and evaluated through the same CLI surface
    blocks = json.loads((model_dir / "model.json").read_text())["blocks"]
    last_block = blocks[-1]["name"]
    scores_path = tmp_path / "last_scores.json"
    run_engine(
        "score",
        "--model", str(model_dir),
        "--manifest", str(manifest),
        "--method", "featurenorm",
        "--block", last_block,
        "--out", str(scores_path),
    )
    eval_path = tmp_path / "last_eval.json"
    run_engine("evaluate", "--scores", str(scores_path), "--out", str(eval_path))
    last_auroc = json.loads(eval_path.read_text())["noise"]["auroc"]

    assert selected_auroc >= last_auroc
    summary = json.loads((out_dir / "run_summary.json").read_text())
    print(
        f"PASS  desk-scale run: train acc {train_report['train_accuracy']:.2f} "
        f"in {train_seconds:.1f}s, selected {summary['selected_block']!r} "
        f"AUROC {selected_auroc:.4f} vs last-block {last_auroc:.4f}"
    )
