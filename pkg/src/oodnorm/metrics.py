"""Detection-quality metrics: AUROC and FPR at a target TPR.

AUROC is the probability that an ID sample outranks an OOD sample, with ties
counting one half (rank-sum computation, O((n+m) log(n+m))). The FPR metric
reuses the exact threshold rule the detector calibrates with.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .scoring import calibrate_threshold


@dataclass(frozen=True)
class EvalResult:
    auroc: float
    fpr_at_tpr: float
    target_tpr: float
    n_id: int
    n_ood: int

    def to_dict(self) -> dict:
        return {
            "auroc": self.auroc,
            "fpr_at_tpr": self.fpr_at_tpr,
            "target_tpr": self.target_tpr,
            "n_id": self.n_id,
            "n_ood": self.n_ood,
        }


def _tie_averaged_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their group's average rank."""
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    boundaries = np.flatnonzero(np.diff(sorted_vals) != 0) + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [values.size]))
    group_rank = (starts + ends + 1) / 2.0  # average of 1-based positions in the group
    ranks_sorted = np.repeat(group_rank, ends - starts)
    ranks = np.empty(values.size, dtype=np.float64)
    ranks[order] = ranks_sorted
    return ranks


def auroc(id_scores, ood_scores) -> float:
    id_s = np.asarray(id_scores, dtype=np.float64)
    ood_s = np.asarray(ood_scores, dtype=np.float64)
    if id_s.size == 0 or ood_s.size == 0:
        raise InputError("AUROC needs at least one score on each side")
    ranks = _tie_averaged_ranks(np.concatenate([id_s, ood_s]))
    u = ranks[: id_s.size].sum() - id_s.size * (id_s.size + 1) / 2.0
    return float(u / (id_s.size * ood_s.size))


def fpr_at_tpr(id_scores, ood_scores, target_tpr: float = 0.95) -> float:
    """Fraction of OOD scores at or above the threshold calibrated on ID scores."""
    ood_s = np.asarray(ood_scores, dtype=np.float64)
    if ood_s.size == 0:
        raise InputError("FPR needs at least one OOD score")
    gamma = calibrate_threshold(id_scores, target_tpr)
    return float(np.count_nonzero(ood_s >= gamma) / ood_s.size)


def evaluate(id_scores, ood_scores, target_tpr: float = 0.95) -> EvalResult:
    return EvalResult(
        auroc=auroc(id_scores, ood_scores),
        fpr_at_tpr=fpr_at_tpr(id_scores, ood_scores, target_tpr),
        target_tpr=target_tpr,
        n_id=len(id_scores),
        n_ood=len(ood_scores),
    )


def evaluate_score_set(score_set, target_tpr: float = 0.95) -> dict:
    """Per-OOD-set results plus an arithmetic-mean average row."""
    if not score_set.ood_scores:
        raise InputError("score set has no OOD sets to evaluate")
    results = {
        name: evaluate(score_set.id_scores, scores, target_tpr)
        for name, scores in score_set.ood_scores.items()
    }
    doc = {name: res.to_dict() for name, res in results.items()}
    doc["average"] = {
        "auroc": float(np.mean([r.auroc for r in results.values()])),
        "fpr_at_tpr": float(np.mean([r.fpr_at_tpr for r in results.values()])),
        "target_tpr": target_tpr,
    }
    return doc
