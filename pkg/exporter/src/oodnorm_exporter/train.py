"""Train the demo CNN on an exported dataset."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .demo_net import DemoNet

log = logging.getLogger(__name__)

ACCURACY_FLOOR = 0.80


def load_split(manifest_path, split: str):
    """Read an exported split's tensors and labels back as torch batches."""
    manifest_path = Path(manifest_path)
    doc = json.loads(manifest_path.read_text())
    paths = doc[split]
    labels = doc.get("labels", {}).get(split)
    if labels is None:
        raise ValueError(f"manifest {manifest_path} has no labels for split '{split}'")
    base = manifest_path.parent
    images = np.stack([np.load(base / p) for p in paths])
    return torch.from_numpy(images), torch.tensor(labels, dtype=torch.long)


def train_demo(
    manifest_path,
    out_path,
    epochs: int = 3,
    seed: int = 0,
    batch_size: int = 64,
    lr: float = 1e-3,
    channels: tuple = (16, 32, 64),
    order_style: str = "Conv-BN-ReLU",
) -> dict:
    """Train on the manifest's id_train split and save a checkpoint.

    Epochs may be zero: the initialized network is saved unchanged, which keeps
    the export pipeline smoke-testable without a training run.
    """
    torch.manual_seed(seed)
    images, labels = load_split(manifest_path, "id_train")

    model = DemoNet(channels=channels, order_style=order_style)
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    loss_fn = nn.CrossEntropyLoss()
    order_rng = np.random.default_rng(seed)

    model.train()
    for _ in range(epochs):
        order = order_rng.permutation(len(images))
        for start in range(0, len(images), batch_size):
            idx = order[start : start + batch_size]
            batch, target = images[idx], labels[idx]
            optimizer.zero_grad()
            loss = loss_fn(model(batch), target)
            loss.backward()
            optimizer.step()

    model.eval()
    with torch.no_grad():
        predictions = model(images).argmax(dim=1)
        accuracy = float((predictions == labels).float().mean())
    if epochs > 0 and accuracy < ACCURACY_FLOOR:
        log.warning("train accuracy %.3f below %.2f floor; exporting anyway", accuracy, ACCURACY_FLOOR)

    checkpoint = {
        "state_dict": model.state_dict(),
        "config": model.config(),
        "train_accuracy": accuracy,
        "epochs": epochs,
        "seed": seed,
    }
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(checkpoint, out_path)
    return {"checkpoint": str(out_path), "train_accuracy": accuracy, "epochs": epochs}
