"""Per-region and per-box inference, proposal filtering, label-map export."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from cutlabel.labeler.head import LabelerHead, softmax
from cutlabel.labeler.pooling import box_pool, masked_pool, pooled_logit_score
from cutlabel.tensorstore import LogitMap, MaskProposal, PatchFeatureMap, sparsify_topk
from cutlabel.tensorstore.resample import _footprints


@dataclass(frozen=True)
class RegionPrediction:
    """Softmax prediction for one region (a mask or a box)."""

    image_id: str
    probs: np.ndarray
    top1_class: int
    top1_conf: float
    region: str = ""

    def __post_init__(self) -> None:
        s = float(self.probs.sum())
        if abs(s - 1.0) > 1e-5:
            raise ValueError(f"probabilities sum to {s}")

    def topk(self, m: int) -> list[tuple[int, float]]:
        """Ranked (class, score) pairs, highest first, ties by class index."""
        order = sorted(range(len(self.probs)), key=lambda c: (-self.probs[c], c))
        return [(c, float(self.probs[c])) for c in order[:m]]


def _predict(head: LabelerHead, pooled: np.ndarray, image_id: str, region: str) -> RegionPrediction:
    probs = softmax(head.forward(pooled))
    top1 = int(np.argmax(probs))
    return RegionPrediction(
        image_id=image_id,
        probs=probs,
        top1_class=top1,
        top1_conf=float(probs[top1]),
        region=region,
    )


def predict_region(head: LabelerHead, fmap: PatchFeatureMap, patch_mask: np.ndarray) -> RegionPrediction:
    pooled = masked_pool(fmap, patch_mask)
    return _predict(head, pooled, fmap.image_id, region="mask")


def predict_box(
    head: LabelerHead,
    fmap: PatchFeatureMap,
    box: tuple[float, float, float, float],
    samples: int = 7,
) -> RegionPrediction:
    pooled = box_pool(fmap, box, samples=samples)
    region = "box:" + ",".join(f"{v:.6g}" for v in box)
    return _predict(head, pooled, fmap.image_id, region=region)


@dataclass
class FilterOutcome:
    kept: list[MaskProposal]
    dropped: list[MaskProposal]
    skipped_images: list[str] = field(default_factory=list)


def filter_proposals(
    proposals: Sequence[MaskProposal],
    dense_logits: Mapping[str, np.ndarray],
    labels: Mapping[str, int],
    tau_sel: float = 0.75,
) -> FilterOutcome:
    """Keep proposals whose pooled score on the original label exceeds tau_sel.

    The inequality is strict. Images missing a logit map or label are
    skipped entirely and reported, not treated as drops.
    """
    if not 0.0 < tau_sel < 1.0:
        raise ValueError("tau_sel must be in (0, 1)")
    outcome = FilterOutcome(kept=[], dropped=[])
    skipped: set[str] = set()
    for prop in proposals:
        iid = prop.image_id
        if iid not in dense_logits or iid not in labels:
            skipped.add(iid)
            continue
        score = pooled_logit_score(prop.patch_mask, dense_logits[iid])
        if score[labels[iid]] > tau_sel:
            outcome.kept.append(prop)
        else:
            outcome.dropped.append(prop)
    outcome.skipped_images = sorted(skipped)
    return outcome


@dataclass
class ExternalFilterOutcome:
    kept: list[int]
    dropped: list[int]
    predictions: list[RegionPrediction]

    @property
    def kept_fraction(self) -> float:
        total = len(self.kept) + len(self.dropped)
        return len(self.kept) / total if total else 0.0


def filter_external_masks(
    head: LabelerHead,
    items: Sequence[tuple[PatchFeatureMap, np.ndarray]],
    tau: float = 0.5,
) -> ExternalFilterOutcome:
    """Partition externally produced masks by top-1 confidence >= tau."""
    kept: list[int] = []
    dropped: list[int] = []
    preds: list[RegionPrediction] = []
    for i, (fmap, mask) in enumerate(items):
        pred = predict_region(head, fmap, mask)
        preds.append(pred)
        (kept if pred.top1_conf >= tau else dropped).append(i)
    return ExternalFilterOutcome(kept=kept, dropped=dropped, predictions=preds)


def export_label_map(
    head: LabelerHead,
    fmap: PatchFeatureMap,
    cell_h: int = 15,
    cell_w: int = 15,
    k: int = 5,
) -> LogitMap:
    """Per-cell top-k logits from footprint-pooled features.

    Cells partition the patch grid by the integer footprint rule, so the
    cell grid must not exceed the patch grid.
    """
    gh, gw = fmap.grid_h, fmap.grid_w
    if cell_h > gh or cell_w > gw:
        raise ValueError(f"cell grid {cell_h}x{cell_w} exceeds patch grid {gh}x{gw}")
    grid = fmap.features.reshape(gh, gw, fmap.dim).astype(np.float64)
    rows = _footprints(gh, cell_h)
    cols = _footprints(gw, cell_w)
    dense = np.zeros((cell_h, cell_w, head.classes))
    for cy, (r0, r1) in enumerate(rows):
        for cx, (c0, c1) in enumerate(cols):
            pooled = grid[r0:r1, c0:c1].reshape(-1, fmap.dim).mean(axis=0)
            dense[cy, cx] = head.forward(pooled)
    indices, logits = sparsify_topk(dense, min(k, head.classes))
    return LogitMap(
        image_id=fmap.image_id,
        cell_h=cell_h,
        cell_w=cell_w,
        k=min(k, head.classes),
        classes=head.classes,
        indices=indices,
        logits=logits,
    )
