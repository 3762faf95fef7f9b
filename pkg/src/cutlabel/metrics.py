"""Evaluation metrics: top-1 accuracy, ranking quality, and feature entropy.

Accuracy comes in two flavors because a relabeled dataset has several valid
answers per image: the strict rule scores against the one original label,
the multi-label rule accepts any ground-truth class. Ranking quality is
non-interpolated average precision per class. Feature-space diversity is
estimated with a k-nearest-neighbor entropy estimator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma, gammaln

DIST_FLOOR = 1e-12

_BUCKETS = ("1", "2", "3", "4+")


@dataclass(frozen=True)
class EvalRecord:
    """One evaluated image: scores per class and its ground-truth label set."""

    image_id: str
    probs: np.ndarray
    gt: frozenset[int]
    feature: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.probs.ndim != 1:
            raise ValueError("scores must be a 1-D vector")
        if not np.isfinite(self.probs).all():
            raise ValueError("scores must be finite")
        if not self.gt:
            raise ValueError("ground-truth set is empty")
        if any(not 0 <= c < self.probs.size for c in self.gt):
            raise ValueError("ground-truth class out of range")


def _check_records(records: Sequence[EvalRecord]) -> int:
    if not records:
        raise ValueError("no records")
    classes = records[0].probs.size
    if any(r.probs.size != classes for r in records):
        raise ValueError("records disagree on class count")
    return classes


def top1_accuracy(records: Sequence[EvalRecord], criterion: str = "multi") -> float:
    """Fraction of records whose argmax hits the ground truth.

    The single criterion demands exactly one ground-truth class per record
    and an exact match; the multi criterion counts any correct label.
    """
    if criterion not in ("single", "multi"):
        raise ValueError(f"unknown criterion {criterion!r}")
    _check_records(records)
    correct = 0
    for r in records:
        if criterion == "single" and len(r.gt) != 1:
            raise ValueError(f"record {r.image_id} has {len(r.gt)} labels; "
                             "the single criterion needs exactly one")
        correct += int(np.argmax(r.probs)) in r.gt
    return correct / len(records)


def per_class_ap(records: Sequence[EvalRecord]) -> dict[int, float]:
    """Non-interpolated average precision per class with any positives.

    Images are ranked by descending score, ties by image id; AP averages
    the precision at each positive's rank.
    """
    classes = _check_records(records)
    ids = np.array([r.image_id for r in records])
    scores = np.stack([r.probs for r in records]).astype(np.float64)
    out: dict[int, float] = {}
    for c in range(classes):
        positive = np.array([c in r.gt for r in records])
        if not positive.any():
            continue
        order = np.lexsort((ids, -scores[:, c]))
        hits = np.cumsum(positive[order])
        ranks = np.arange(1, len(records) + 1)
        precisions = (hits / ranks)[positive[order]]
        out[c] = float(np.mean(precisions))
    return out


def mean_ap(records: Sequence[EvalRecord]) -> float:
    """Unweighted mean of per-class average precision."""
    aps = per_class_ap(records)
    if not aps:
        raise ValueError("no class has a positive record")
    return float(np.mean([aps[c] for c in sorted(aps)]))


@dataclass(frozen=True)
class BucketReport:
    images: int
    mean_ap: float


def subgroup_map(records: Sequence[EvalRecord]) -> dict[str, BucketReport]:
    """Mean AP stratified by ground-truth label count (1, 2, 3, 4+).

    Buckets with no records are left out rather than reported as zero.
    """
    _check_records(records)
    out: dict[str, BucketReport] = {}
    for key in _BUCKETS:
        if key == "4+":
            subset = [r for r in records if len(r.gt) >= 4]
        else:
            subset = [r for r in records if len(r.gt) == int(key)]
        if subset:
            out[key] = BucketReport(images=len(subset), mean_ap=mean_ap(subset))
    return out


def format_subgroup_table(table: Mapping[str, BucketReport]) -> str:
    """Aligned text table of the per-bucket report."""
    lines = [f"{'Labels':<8}{'Images':>8}{'mAP':>10}"]
    for key, report in table.items():
        lines.append(f"{'k=' + key:<8}{report.images:>8}{report.mean_ap:>10.4f}")
    return "\n".join(lines)


def knn_entropy(features: np.ndarray, k: int = 3) -> float:
    """Kozachenko-Leonenko entropy from k-th neighbor distances.

    H = (d/N) sum_i log(max(rho_ik, floor)) + log V_d + psi(N) - psi(k)
    with V_d the unit-ball volume and exact Euclidean neighbors. The floor
    keeps duplicate-heavy inputs finite instead of diverging to -inf.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("features must be an N x d matrix")
    n, d = x.shape
    if d < 1:
        raise ValueError("features need at least one dimension")
    if n <= k:
        raise ValueError(f"need more than k={k} points, got {n}")
    if not np.isfinite(x).all():
        raise ValueError("features must be finite")
    dists, _ = cKDTree(x).query(x, k=k + 1)
    rho = np.maximum(dists[:, k], DIST_FLOOR)
    log_ball = (d / 2.0) * np.log(np.pi) - gammaln(d / 2.0 + 1.0)
    return float((d / n) * np.sum(np.log(rho)) + log_ball + digamma(n) - digamma(k))
