import json
from pathlib import Path

import numpy as np
import pytest
import torch
from torch import nn

from oodnorm_exporter.export_model import (
    ExportError,
    ExportPlan,
    _convert_layer,
    engine_forward_logits,
    export_model,
)


def test_export_report_accounts_for_every_parameter(exported_model):
    _, report = exported_model
    assert report["mapped_parameters"] == report["source_parameters"]
    assert all("num_batches_tracked" in d for d in report["dropped"])
    assert report["verification_rel_error"] < 1e-4


def test_model_dir_layout(exported_model):
    model_dir, _ = exported_model
    doc = json.loads((model_dir / "model.json").read_text())
    assert doc["input_shape"] == [3, 32, 32]
    assert [b["name"] for b in doc["blocks"]] == ["Block 1", "Block 2", "Block 3"]
    assert doc["head"][-1]["kind"] == "linear"
    for block in doc["blocks"]:
        for layer in block["layers"]:
            for key in ("weight_file", "bias_file", "gamma_file"):
                if key in layer:
                    assert (model_dir / layer[key]).exists()


def test_reexport_is_bitwise_identical(trained_checkpoint, tmp_path):
    ckpt, _, _ = trained_checkpoint
    for d in ("x", "y"):
        export_model(ExportPlan(checkpoint=str(ckpt), out_dir=str(tmp_path / d), verify=False))
    x, y = tmp_path / "x", tmp_path / "y"
    files = sorted(p.name for p in x.glob("*"))
    assert files == sorted(p.name for p in y.glob("*"))
    for name in files:
        assert (x / name).read_bytes() == (y / name).read_bytes()


def test_unsupported_layers_rejected(tmp_path):
    with pytest.raises(ExportError, match="SiLU"):
        _convert_layer(nn.SiLU(), tmp_path, "p", [])
    with pytest.raises(ExportError, match="padded max pooling"):
        _convert_layer(nn.MaxPool2d(2, 2, padding=1), tmp_path, "p", [])
    with pytest.raises(ExportError, match="grouped"):
        _convert_layer(nn.Conv2d(4, 4, 3, groups=2), tmp_path, "p", [])
    with pytest.raises(ExportError, match="dilated"):
        _convert_layer(nn.Conv2d(4, 4, 3, dilation=2), tmp_path, "p", [])


def test_cross_engine_fidelity_ten_probes(exported_model, trained_checkpoint, tmp_path):
    """Source-framework and engine logits agree within 1e-4 relative on 10 probes."""
    model_dir, _ = exported_model
    ckpt, _, _ = trained_checkpoint
    loaded = torch.load(ckpt, map_location="cpu", weights_only=False)
    from oodnorm_exporter.demo_net import DemoNet

    net = DemoNet.from_config(loaded["config"])
    net.load_state_dict(loaded["state_dict"])
    net.eval()

    rng = np.random.default_rng(909)
    worst = 0.0
    for i in range(10):
        probe = rng.standard_normal((3, 32, 32)).astype(np.float32)
        probe_path = Path(tmp_path) / f"probe_{i}.npy"
        np.save(probe_path, probe)
        with torch.no_grad():
            source = net(torch.from_numpy(probe[None]))[0].numpy().astype(np.float64)
        engine = engine_forward_logits(model_dir, probe_path)
        rel = float(np.max(np.abs(engine - source)) / max(np.max(np.abs(source)), 1e-12))
        worst = max(worst, rel)
    assert worst <= 1e-4
    print(f"PASS  ten-probe cross-engine fidelity, worst relative error {worst:.2e}")
