"""Convert images into the engine's manifest + tensor-file layout."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datasets import (
    load_image_folder,
    normalize,
    synthetic_split,
    uniform_noise_images,
)

DEFAULT_MEAN = (0.5, 0.5, 0.5)
DEFAULT_STD = (0.25, 0.25, 0.25)


@dataclass
class DatasetPlan:
    out_dir: str
    size: int = 32
    mean: tuple = DEFAULT_MEAN
    std: tuple = DEFAULT_STD
    seed: int = 0
    synthetic_train: int = 0          # per-split synthetic counts; 0 disables
    synthetic_test: int = 0
    noise_ood: int = 0                # uniform-noise OOD tensors to generate
    id_train_dir: str | None = None   # image folders as an alternative source
    id_test_dir: str | None = None
    ood_dirs: dict = field(default_factory=dict)


def _write_split(images, split: str, out_dir: Path, mean, std) -> list:
    split_dir = out_dir / split
    split_dir.mkdir(parents=True, exist_ok=True)
    rels = []
    for i, img in enumerate(images):
        rel = f"{split}/img_{i:04d}.npy"
        np.save(out_dir / rel, normalize(img, mean, std))
        rels.append(rel)
    return rels


def export_dataset(plan: DatasetPlan) -> dict:
    """Write normalized tensors plus a manifest; returns a small report."""
    out_dir = Path(plan.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(plan.seed)
    skipped = 0
    labels = {}

    if plan.synthetic_train:
        train_images, train_labels = synthetic_split(rng, plan.synthetic_train, plan.size)
        test_images, test_labels = synthetic_split(rng, plan.synthetic_test, plan.size)
        labels["id_train"] = train_labels
        labels["id_test"] = test_labels
    else:
        train_images, s1 = load_image_folder(plan.id_train_dir, plan.size)
        test_images, s2 = load_image_folder(plan.id_test_dir, plan.size)
        skipped += s1 + s2

    manifest = {
        "id_train": _write_split(train_images, "id_train", out_dir, plan.mean, plan.std),
        "id_test": _write_split(test_images, "id_test", out_dir, plan.mean, plan.std),
        "ood_sets": {},
        "preprocessing": {
            "mean": list(plan.mean),
            "std": list(plan.std),
            "size": [plan.size, plan.size],
        },
    }
    if labels:
        manifest["labels"] = labels

    for name, folder in plan.ood_dirs.items():
        images, s = load_image_folder(folder, plan.size)
        skipped += s
        manifest["ood_sets"][name] = _write_split(images, f"ood_{name}", out_dir, plan.mean, plan.std)

    if plan.noise_ood:
        noise = uniform_noise_images(rng, plan.noise_ood, plan.size)
        manifest["ood_sets"]["noise"] = _write_split(
            noise, "ood_noise", out_dir, plan.mean, plan.std
        )

    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return {
        "manifest": str(out_dir / "manifest.json"),
        "counts": {
            "id_train": len(manifest["id_train"]),
            "id_test": len(manifest["id_test"]),
            **{f"ood:{k}": len(v) for k, v in manifest["ood_sets"].items()},
        },
        "skipped": skipped,
    }
