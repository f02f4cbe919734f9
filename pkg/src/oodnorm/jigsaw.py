"""Pseudo-OOD generation by 3x3 tile shuffling.

Dimensions not divisible by 3 are handled by center-cropping to the largest
3-multiple, shuffling, then nearest-neighbor resizing back to the original
size. The tile permutation is drawn per sample from a counter-based RNG keyed
by (seed, sample_index), rejecting the identity permutation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

GRID = 3


@dataclass(frozen=True)
class JigsawConfig:
    seed: int = 0
    grid: int = GRID
    resize_policy: str = "nearest"

    def __post_init__(self):
        if self.grid != GRID:
            raise ShapeError(f"tile grid is fixed to {GRID}, got {self.grid}")
        if self.resize_policy != "nearest":
            raise ShapeError(f"unsupported resize policy {self.resize_policy!r}")


def draw_tile_permutation(seed: int, sample_index: int) -> np.ndarray:
    """Uniform draw over the 9!-1 non-identity permutations of 9 tiles."""
    key = np.array([seed, sample_index], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    identity = np.arange(GRID * GRID)
    while True:
        perm = rng.permutation(GRID * GRID)
        if not np.array_equal(perm, identity):
            return perm


def center_crop_to_grid(image: np.ndarray) -> np.ndarray:
    """Center-crop H and W down to the largest multiples of the grid size."""
    _, h, w = image.shape
    h3, w3 = GRID * (h // GRID), GRID * (w // GRID)
    top, left = (h - h3) // 2, (w - w3) // 2
    return image[:, top : top + h3, left : left + w3]


def shuffle_tiles(cropped: np.ndarray, perm: np.ndarray) -> np.ndarray:
    """Rearrange the 9 tiles of a grid-divisible image; slot t receives tile perm[t]."""
    c, h3, w3 = cropped.shape
    th, tw = h3 // GRID, w3 // GRID
    tiles = (
        cropped.reshape(c, GRID, th, GRID, tw)
        .transpose(1, 3, 0, 2, 4)
        .reshape(GRID * GRID, c, th, tw)
    )
    out = tiles[perm].reshape(GRID, GRID, c, th, tw).transpose(2, 0, 3, 1, 4)
    return np.ascontiguousarray(out.reshape(c, h3, w3))


def resize_nearest(image: np.ndarray, h: int, w: int) -> np.ndarray:
    """Nearest-neighbor resize using the pixel-center mapping floor((i+0.5)*src/dst)."""
    _, h_src, w_src = image.shape
    rows = np.minimum(((np.arange(h) + 0.5) * h_src / h).astype(np.int64), h_src - 1)
    cols = np.minimum(((np.arange(w) + 0.5) * w_src / w).astype(np.int64), w_src - 1)
    return np.ascontiguousarray(image[:, rows[:, None], cols[None, :]])


def make_jigsaw(image: np.ndarray, config: JigsawConfig, sample_index: int) -> np.ndarray:
    """Produce the shuffled pseudo-OOD counterpart of one C x H x W image."""
    img = np.asarray(image, dtype=np.float32)
    if img.ndim != 3:
        raise ShapeError(f"make_jigsaw expects C x H x W input, got shape {img.shape}")
    _, h, w = img.shape
    if h < GRID or w < GRID:
        raise ShapeError(f"image {h}x{w} too small for a {GRID}x{GRID} tile grid")
    perm = draw_tile_permutation(config.seed, sample_index)
    shuffled = shuffle_tiles(center_crop_to_grid(img), perm)
    if shuffled.shape[1:] == (h, w):
        return shuffled
    return resize_nearest(shuffled, h, w)
