"""Convert a trained checkpoint into the engine's model-directory format.

Each exported directory holds model.json plus one NPY file per parameter.
After writing, a probe image is pushed through both the source network and
the engine (via the engine's ``forward`` CLI, its public surface) and the
logits must agree within 1e-4 relative.
"""

from __future__ import annotations

import json
import subprocess
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .demo_net import DemoNet


class ExportError(Exception):
    """Source model contains something the engine's layer set cannot express."""


@dataclass
class ExportPlan:
    checkpoint: str
    out_dir: str
    block_names: list = field(default_factory=list)  # defaults to "Block 1..N"
    verify: bool = True
    verify_tolerance: float = 1e-4


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ExportError(message)


def _pair(value, what: str) -> int:
    if isinstance(value, (tuple, list)):
        _require(value[0] == value[1], f"{what} must be square, got {value}")
        return int(value[0])
    return int(value)


def _save(arr: torch.Tensor, out_dir: Path, name: str) -> str:
    np.save(out_dir / f"{name}.npy", arr.detach().numpy().astype(np.float32))
    return f"{name}.npy"


def _convert_layer(module: nn.Module, out_dir: Path, prefix: str, mapped: list):
    if isinstance(module, nn.Conv2d):
        _require(module.dilation == (1, 1), "dilated convolution unsupported")
        _require(module.groups == 1, "grouped convolution unsupported")
        _require(module.padding_mode == "zeros", "only zero padding supported")
        k = _pair(module.kernel_size, "conv kernel")
        layer = {
            "kind": "conv2d",
            "out_channels": module.out_channels,
            "kernel": k,
            "stride": _pair(module.stride, "conv stride"),
            "padding": _pair(module.padding, "conv padding"),
            "weight_file": _save(module.weight, out_dir, f"{prefix}_w"),
        }
        mapped.append(f"{prefix}.weight")
        if module.bias is not None:
            layer["bias_file"] = _save(module.bias, out_dir, f"{prefix}_b")
            mapped.append(f"{prefix}.bias")
        return layer
    if isinstance(module, nn.BatchNorm2d):
        _require(module.running_mean is not None, "batchnorm without running stats unsupported")
        channels = module.num_features
        gamma = module.weight if module.affine else torch.ones(channels)
        beta = module.bias if module.affine else torch.zeros(channels)
        layer = {
            "kind": "batchnorm",
            "gamma_file": _save(gamma, out_dir, f"{prefix}_gamma"),
            "beta_file": _save(beta, out_dir, f"{prefix}_beta"),
            "mean_file": _save(module.running_mean, out_dir, f"{prefix}_mean"),
            "var_file": _save(module.running_var, out_dir, f"{prefix}_var"),
            "eps": module.eps,
        }
        if module.affine:
            mapped.extend([f"{prefix}.weight", f"{prefix}.bias"])
        return layer
    if isinstance(module, nn.ReLU):
        return {"kind": "relu"}
    if isinstance(module, nn.MaxPool2d):
        _require(_pair(module.padding, "pool padding") == 0, "padded max pooling unsupported")
        _require(module.dilation in (1, (1, 1)), "dilated pooling unsupported")
        _require(not module.ceil_mode, "ceil-mode pooling unsupported")
        return {
            "kind": "maxpool",
            "window": _pair(module.kernel_size, "pool window"),
            "stride": _pair(module.stride, "pool stride"),
        }
    if isinstance(module, nn.AdaptiveAvgPool2d):
        size = module.output_size
        _require(size in (1, (1, 1)), "only global average pooling supported")
        return {"kind": "avgpool-global"}
    if isinstance(module, nn.Flatten):
        return {"kind": "flatten"}
    if isinstance(module, nn.Linear):
        layer = {
            "kind": "linear",
            "weight_file": _save(module.weight, out_dir, f"{prefix}_w"),
        }
        mapped.append(f"{prefix}.weight")
        if module.bias is not None:
            layer["bias_file"] = _save(module.bias, out_dir, f"{prefix}_b")
            mapped.append(f"{prefix}.bias")
        return layer
    raise ExportError(f"unsupported layer {type(module).__name__} at {prefix}")


def _probe_image(shape, seed: int = 424242) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal(shape).astype(np.float32)


def engine_forward_logits(model_dir, image_path) -> np.ndarray:
    """Logits from the engine's own CLI; the exporter never imports the engine."""
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "forward.json"
        cmd = [
            sys.executable, "-m", "oodnorm.cli", "forward",
            "--model", str(model_dir), "--input", str(image_path), "--out", str(out),
        ]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        if proc.returncode != 0:
            raise ExportError(f"engine forward failed: {proc.stderr.strip()}")
        return np.asarray(json.loads(out.read_text())["logits"], dtype=np.float64)


def export_model(plan: ExportPlan) -> dict:
    """Write the model directory and verify logits agree across engines."""
    checkpoint = torch.load(plan.checkpoint, map_location="cpu", weights_only=False)
    model = DemoNet.from_config(checkpoint["config"])
    model.load_state_dict(checkpoint["state_dict"])
    model.eval()

    out_dir = Path(plan.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    mapped: list[str] = []

    block_names = plan.block_names or [f"Block {i + 1}" for i in range(len(model.blocks))]
    blocks_doc = []
    for b, (name, block) in enumerate(zip(block_names, model.blocks)):
        layers = [
            _convert_layer(module, out_dir, f"block{b + 1}_{i}", mapped)
            for i, module in enumerate(block)
        ]
        blocks_doc.append(
            {"name": name, "order_style": model.order_style, "residual": False, "layers": layers}
        )
    head_doc = [
        _convert_layer(module, out_dir, f"head_{i}", mapped)
        for i, module in enumerate(model.head)
    ]

    input_size = 32
    doc = {
        "input_shape": [model.in_channels, input_size, input_size],
        "blocks": blocks_doc,
        "head": head_doc,
    }
    (out_dir / "model.json").write_text(json.dumps(doc, indent=2) + "\n")

    n_source = sum(1 for _ in model.named_parameters())
    if len(mapped) != n_source:
        raise ExportError(f"{n_source - len(mapped)} source parameter(s) unaccounted for")
    dropped = sorted(
        name for name, _ in model.named_buffers() if name.endswith("num_batches_tracked")
    )
    report = {
        "blocks": block_names,
        "mapped_parameters": len(mapped),
        "source_parameters": n_source,
        "dropped": dropped,
    }

    if plan.verify:
        probe = _probe_image((model.in_channels, input_size, input_size))
        with torch.no_grad():
            source = model(torch.from_numpy(probe[None]))[0].numpy().astype(np.float64)
        with tempfile.TemporaryDirectory() as tmp:
            probe_path = Path(tmp) / "probe.npy"
            np.save(probe_path, probe)
            engine = engine_forward_logits(out_dir, probe_path)
        scale = max(float(np.max(np.abs(source))), 1e-12)
        rel = float(np.max(np.abs(engine - source)) / scale)
        if rel > plan.verify_tolerance:
            raise ExportError(
                f"verification failed: relative logit error {rel:.2e} above {plan.verify_tolerance:.0e}"
            )
        report["verification_rel_error"] = rel

    (out_dir / "export_report.json").write_text(json.dumps(report, indent=2) + "\n")
    return {"model_dir": str(out_dir), **report}
