"""Preset comparison: object recall against ground-truth masks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cutlabel.maskcut.config import DiscoveryConfig
from cutlabel.maskcut.discover import discover
from cutlabel.tensorstore import PatchFeatureMap


@dataclass(frozen=True)
class SweepRow:
    preset_id: str
    recall: float
    matched: int
    total: int


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 0.0
    return float(np.logical_and(a, b).sum()) / float(union)


def match_recall(
    proposals: list[np.ndarray],
    gt_masks: list[np.ndarray],
    iou_threshold: float = 0.5,
) -> tuple[int, int]:
    """Count ground-truth masks covered by at least one proposal.

    A ground-truth object counts as matched when some proposal reaches the
    IoU threshold; one proposal may match several objects.
    """
    matched = 0
    for gt in gt_masks:
        if any(mask_iou(p, gt) >= iou_threshold for p in proposals):
            matched += 1
    return matched, len(gt_masks)


def sweep_recall(
    presets: list[DiscoveryConfig],
    images: list[tuple[PatchFeatureMap, list[np.ndarray]]],
    pixel_hw: tuple[int, int],
    iou_threshold: float = 0.5,
) -> list[SweepRow]:
    """Recall table over presets, sorted by recall descending then preset id.

    ``images`` pairs each feature map with its ground-truth pixel masks.
    """
    if not images:
        raise ValueError("sweep needs a non-empty eval set")
    rows = []
    for preset in presets:
        matched = 0
        total = 0
        for fmap, gt_masks in sorted(images, key=lambda pair: pair[0].image_id):
            proposals = discover(fmap, preset, pixel_hw=pixel_hw)
            pixel_masks = [p.pixel_mask for p in proposals if p.pixel_mask is not None]
            m, t = match_recall(pixel_masks, gt_masks, iou_threshold)
            matched += m
            total += t
        recall = matched / total if total else 0.0
        rows.append(SweepRow(preset.preset_id, recall, matched, total))
    rows.sort(key=lambda r: (-r.recall, r.preset_id))
    return rows
