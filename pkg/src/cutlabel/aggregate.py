"""Image-level multi-label construction from per-mask predictions.

Two local strategies: the hard variant thresholds deduplicated top-1
confidences into a class set, the soft variant takes per-class maxima over
every mask's full probability vector. Either can then be merged with a
global signal (the original single label, or a whole-image prediction) by
elementwise max.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from cutlabel.tensorstore import Grounding, ImageLabelSet

_MODES = ("hard", "soft")
_GLOBAL_MODES = ("none", "original", "pred")


@dataclass(frozen=True)
class AggregationPolicy:
    mode: str = "hard"
    tau: float = 0.5
    global_mode: str = "none"
    report_threshold: float = 0.5

    def __post_init__(self) -> None:
        if self.mode not in _MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.global_mode not in _GLOBAL_MODES:
            raise ValueError(f"unknown global mode {self.global_mode!r}")
        if self.mode == "hard" and not 0.0 < self.tau < 1.0:
            raise ValueError("tau must be in (0, 1) for the hard mode")

    @property
    def tag(self) -> str:
        return "LocalHard" if self.mode == "hard" else "LocalSoft"


@dataclass(frozen=True)
class ScoredMask:
    """One mask's full probability vector plus its identity for grounding."""

    probs: np.ndarray
    iteration_index: int
    mask_rle: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=np.float64))
        if self.probs.ndim != 1:
            raise ValueError("probs must be a vector")

    @property
    def top1_class(self) -> int:
        return int(np.argmax(self.probs))

    @property
    def top1_conf(self) -> float:
        return float(self.probs[self.top1_class])


def aggregate_masks(scored: Sequence[ScoredMask]) -> dict[int, ScoredMask]:
    """Deduplicate top-1 predictions per class, keeping the most confident.

    Equal confidences resolve to the lower iteration index so the winning
    grounding is deterministic.
    """
    best: dict[int, ScoredMask] = {}
    for sm in scored:
        cls = sm.top1_class
        cur = best.get(cls)
        if (
            cur is None
            or sm.top1_conf > cur.top1_conf
            or (sm.top1_conf == cur.top1_conf and sm.iteration_index < cur.iteration_index)
        ):
            best[cls] = sm
    return best


def build_local(
    image_id: str,
    scored: Sequence[ScoredMask],
    policy: AggregationPolicy,
    classes: int,
) -> ImageLabelSet:
    """Construct the local label set for one image under the given policy."""
    soft = np.zeros(classes)
    groundings: dict[int, Grounding] = {}
    if policy.mode == "hard":
        best = aggregate_masks(scored)
        for cls, sm in best.items():
            soft[cls] = sm.top1_conf
        hard = soft > policy.tau
        for cls, sm in best.items():
            if hard[cls]:
                groundings[cls] = Grounding(sm.mask_rle, confidence=soft[cls])
        return ImageLabelSet(image_id, soft, policy.tag, hard=hard, groundings=groundings)
    for sm in scored:
        np.maximum(soft, sm.probs, out=soft)
    for cls in range(classes):
        if soft[cls] >= policy.report_threshold:
            winner = min(
                (sm for sm in scored if sm.probs[cls] == soft[cls]),
                key=lambda sm: sm.iteration_index,
            )
            groundings[cls] = Grounding(winner.mask_rle, confidence=float(soft[cls]))
    return ImageLabelSet(image_id, soft, policy.tag, hard=None, groundings=groundings)


def merge_global(
    local: ImageLabelSet,
    policy: AggregationPolicy,
    original_label: int | None = None,
    global_probs: np.ndarray | None = None,
) -> ImageLabelSet:
    """Elementwise max of the local labels with a global signal.

    The original-label mode raises that class to 1.0; the prediction mode
    maxes with a whole-image probability vector. Hard sets are rethresholded
    from the merged soft scores.
    """
    if policy.global_mode == "none":
        return local
    if policy.global_mode == "original":
        if original_label is None:
            raise ValueError("original-label merge needs the original label")
        g = np.zeros(local.classes)
        g[original_label] = 1.0
        suffix = "+Original"
    else:
        if global_probs is None:
            raise ValueError("prediction merge needs global probabilities")
        g = np.asarray(global_probs, dtype=np.float64)
        if g.shape != (local.classes,):
            raise ValueError("global probability vector has the wrong length")
        suffix = "+Pred"
    soft = np.maximum(local.soft, g)
    hard = soft > policy.tau if local.hard is not None else None
    return ImageLabelSet(
        local.image_id,
        soft,
        local.strategy_tag + suffix,
        hard=hard,
        groundings=dict(local.groundings),
    )


@dataclass
class LabelStats:
    """Distribution of per-image label counts at a confidence threshold."""

    total: int
    buckets: dict[str, float]
    average: float
    threshold: float
    counts: dict[str, int] = field(default_factory=dict)


_BUCKET_KEYS = ("0", "1", "2", "3", "4+")


def label_stats(labels: Sequence[ImageLabelSet], threshold: float = 0.5) -> LabelStats:
    """Bucket images by how many classes clear the threshold.

    The average is the exact mean of per-image counts, which equals the
    bucket-weighted mean whenever no image exceeds four labels.
    """
    if not labels:
        raise ValueError("no label sets")
    counts = {k: 0 for k in _BUCKET_KEYS}
    running = 0
    for ls in labels:
        k = int((ls.soft >= threshold).sum())
        running += k
        counts[str(k) if k < 4 else "4+"] += 1
    n = len(labels)
    fractions = {key: counts[key] / n for key in _BUCKET_KEYS}
    total_frac = sum(fractions.values())
    if abs(total_frac - 1.0) > 1e-9:
        raise AssertionError(f"bucket fractions sum to {total_frac}")
    return LabelStats(
        total=n,
        buckets=fractions,
        average=running / n,
        threshold=threshold,
        counts=counts,
    )


def format_label_stats(stats: LabelStats) -> str:
    """Aligned text table: one percentage column per bucket plus the average."""
    headers = [f"k={k}" if k != "4+" else "k>=4" for k in _BUCKET_KEYS] + ["Avg"]
    values = [f"{stats.buckets[k] * 100:.2f}%" for k in _BUCKET_KEYS]
    values.append(f"{stats.average:.2f}")
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    head = "  ".join(h.rjust(w) for h, w in zip(headers, widths))
    body = "  ".join(v.rjust(w) for v, w in zip(values, widths))
    return f"label distribution at threshold {stats.threshold:g} over {stats.total} images\n{head}\n{body}"
