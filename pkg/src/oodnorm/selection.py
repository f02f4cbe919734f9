"""Block selection by mean ID/pseudo-OOD norm ratio over the training set.

For each training sample the engine forwards the image and its jigsaw
counterpart, forms the per-block ratio of the two feature-norm means, and
averages ratios per block. The block with the largest mean ratio wins;
exact ties go to the earliest block in network order. Samples whose
pseudo-OOD norm is zero at a block are skipped for that block and counted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRatioError, InputError, SelectionError
from .featurenorm import feature_norm, norm_ratio
from .jigsaw import JigsawConfig, make_jigsaw
from .micronet import ModelSpec, forward_with_taps


@dataclass(frozen=True)
class SelectionReport:
    per_block: dict            # block name -> mean ratio
    selected: str
    skipped_samples: dict      # block name -> count of degenerate skips
    sample_count: int

    def to_dict(self) -> dict:
        return {
            "per_block": {k: float(v) for k, v in self.per_block.items()},
            "selected": self.selected,
            "skipped_samples": dict(self.skipped_samples),
            "sample_count": self.sample_count,
        }


def select_block(
    model: ModelSpec,
    samples,
    config: JigsawConfig,
) -> SelectionReport:
    """Score every block on (index, image) pairs and pick the argmax block.

    ``samples`` is an iterable of (sample_index, C x H x W image); the index
    keys the per-sample jigsaw permutation, so a subsampled run shuffles each
    image exactly as the full run would.
    """
    names = model.block_names
    sums = {n: 0.0 for n in names}
    counts = {n: 0 for n in names}
    skipped = {n: 0 for n in names}
    total = 0

    for sample_index, image in samples:
        total += 1
        fwd_id = forward_with_taps(model, image)
        fwd_pseudo = forward_with_taps(model, make_jigsaw(image, config, sample_index))
        for name in names:
            n_id = feature_norm(fwd_id.taps[name]).mean
            n_pseudo = feature_norm(fwd_pseudo.taps[name]).mean
            try:
                ratio = norm_ratio(n_id, n_pseudo, block=name, sample=sample_index)
            except DegenerateRatioError:
                skipped[name] += 1
                continue
            sums[name] += ratio
            counts[name] += 1

    if total == 0:
        raise InputError("block selection needs at least one training sample")
    for name in names:
        if counts[name] == 0:
            raise SelectionError(
                f"every sample had a zero pseudo-OOD norm at block '{name}'"
            )

    per_block = {n: sums[n] / counts[n] for n in names}
    best = max(per_block.values())
    selected = next(n for n in names if per_block[n] == best)
    return SelectionReport(
        per_block=per_block,
        selected=selected,
        skipped_samples=skipped,
        sample_count=total,
    )


def subsample_indices(n: int, max_samples: int | None, seed: int) -> list[int]:
    """Deterministic choice of training indices; full order when no cap is set."""
    if max_samples is None or max_samples >= n:
        return list(range(n))
    if max_samples < 1:
        raise InputError(f"max_samples must be >= 1, got {max_samples}")
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
    picked = rng.choice(n, size=max_samples, replace=False)
    return sorted(int(i) for i in picked)
