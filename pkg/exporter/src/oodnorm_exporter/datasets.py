"""Synthetic two-class images and image-folder loading for dataset export."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif"}


def grating_image(rng: np.random.Generator, label: int, size: int = 32) -> np.ndarray:
    """Oriented sinusoidal grating in [0, 1]: class 0 near-vertical, class 1 near-horizontal."""
    base = 0.0 if label == 0 else 90.0
    theta = np.deg2rad(base + rng.uniform(-25.0, 25.0))
    freq = rng.uniform(2.0, 5.0)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    ys, xs = np.mgrid[0:size, 0:size]
    wave = np.sin(2.0 * np.pi * freq * (xs * np.cos(theta) + ys * np.sin(theta)) / size + phase)
    img = 0.5 + 0.4 * wave
    img = img[None, :, :] + rng.normal(0.0, 0.03, (3, size, size))
    img += rng.normal(0.0, 0.02, (3, 1, 1))  # mild per-channel tint
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def synthetic_split(rng: np.random.Generator, n: int, size: int = 32):
    """n images with alternating labels; returns (images, labels)."""
    labels = [i % 2 for i in range(n)]
    images = [grating_image(rng, lab, size) for lab in labels]
    return images, labels


def uniform_noise_images(rng: np.random.Generator, n: int, size: int = 32) -> list:
    """Structure-free OOD: independent uniform pixels across [0, 1]."""
    return [rng.uniform(0.0, 1.0, (3, size, size)).astype(np.float32) for _ in range(n)]


def load_image_folder(folder, size: int):
    """Decode every image under ``folder`` to float32 CHW in [0, 1].

    Undecodable files are skipped with a counted warning.
    """
    from PIL import Image

    folder = Path(folder)
    images, skipped = [], 0
    for path in sorted(folder.rglob("*")):
        if path.suffix.lower() not in IMAGE_SUFFIXES:
            continue
        try:
            with Image.open(path) as im:
                rgb = im.convert("RGB").resize((size, size))
        except OSError:
            skipped += 1
            log.warning("skipping undecodable image %s", path)
            continue
        arr = np.asarray(rgb, dtype=np.float32) / 255.0
        images.append(np.ascontiguousarray(arr.transpose(2, 0, 1)))
    if skipped:
        log.warning("%d image(s) skipped during decode", skipped)
    return images, skipped


def normalize(image: np.ndarray, mean, std) -> np.ndarray:
    m = np.asarray(mean, dtype=np.float32)[:, None, None]
    s = np.asarray(std, dtype=np.float32)[:, None, None]
    return ((image - m) / s).astype(np.float32)
