"""Iterative foreground extraction from one affinity graph per image."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.ndimage

from cutlabel.maskcut.config import DiscoveryConfig
from cutlabel.maskcut.eigen import CutResult, second_eigvec
from cutlabel.maskcut.graph import AffinityGraph, build_affinity
from cutlabel.tensorstore import MaskProposal, PatchFeatureMap, bilinear_resize


def _corner_indices(grid_h: int, grid_w: int) -> tuple[int, int, int, int]:
    return (0, grid_w - 1, (grid_h - 1) * grid_w, grid_h * grid_w - 1)


def select_foreground(
    x: np.ndarray,
    grid_h: int,
    grid_w: int,
    corner_limit: int = 2,
    active: np.ndarray | None = None,
) -> tuple[np.ndarray, bool, str | None]:
    """Mean-threshold the eigenvector and orient the foreground side.

    The initial mask keeps active nodes with ``x`` at or above the active
    mean. It flips to the complement when the largest-|x| node falls outside
    (that node anchors the salient region), and after that when the mask
    still holds more than ``corner_limit`` of the four grid corners while
    the complement does not; when both sides hold too many corners the side
    satisfying the magnitude criterion wins.

    Returns ``(mask, flipped, reason)`` where mask is a flat boolean vector.
    """
    x = np.asarray(x, dtype=np.float64)
    n = grid_h * grid_w
    if x.shape != (n,):
        raise ValueError(f"x length {x.shape} does not match grid {grid_h}x{grid_w}")
    if active is None:
        active = np.ones(n, dtype=bool)
    active = np.asarray(active, dtype=bool)
    idx = np.flatnonzero(active)
    if idx.size == 0:
        return np.zeros(n, dtype=bool), False, None
    mu = float(x[idx].mean())
    mask = active & (x >= mu)
    flipped = False
    reason: str | None = None

    peak = int(idx[np.argmax(np.abs(x[idx]))])
    if not mask[peak]:
        mask = active & ~mask
        flipped = True
        reason = "max-magnitude"

    corners = _corner_indices(grid_h, grid_w)

    def corner_count(m: np.ndarray) -> int:
        return int(sum(bool(m[c]) for c in corners))

    if corner_count(mask) > corner_limit:
        other = active & ~mask
        if corner_count(other) <= corner_limit:
            mask = other
            flipped = True
            reason = "corner-rule"
    return mask, flipped, reason


def foreground_cohesion(graph: AffinityGraph, mask: np.ndarray) -> float:
    """Fraction of strong edges among distinct foreground pairs (1.0 if single)."""
    fg = np.flatnonzero(mask)
    m = fg.size
    if m <= 1:
        return 1.0
    sub = graph.W[np.ix_(fg, fg)]
    strong = sub >= 0.5
    np.fill_diagonal(strong, False)
    return float(strong.sum()) / (m * (m - 1))


def upsample_mask(patch_mask: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Lift a patch mask to pixel resolution: bilinear then threshold at 0.5."""
    dense = bilinear_resize(patch_mask.astype(np.float64), out_h, out_w)
    return dense >= 0.5


def refine_mask(pixel_mask: np.ndarray, min_component_px: int = 4) -> np.ndarray:
    """Clean a pixel mask: 3x3 opening, 3x3 closing, drop tiny components."""
    mask = np.asarray(pixel_mask, dtype=bool)
    structure = np.ones((3, 3), dtype=bool)
    out = scipy.ndimage.binary_opening(mask, structure=structure)
    out = scipy.ndimage.binary_closing(out, structure=structure)
    labels, count = scipy.ndimage.label(out, structure=structure)
    if count == 0:
        return out
    sizes = scipy.ndimage.sum_labels(out, labels, index=np.arange(1, count + 1))
    keep = np.flatnonzero(sizes >= min_component_px) + 1
    return np.isin(labels, keep)


def discover(
    fmap: PatchFeatureMap,
    cfg: DiscoveryConfig,
    pixel_hw: tuple[int, int] | None = None,
) -> list[MaskProposal]:
    """Extract up to ``cfg.max_proposals`` disjoint foreground regions.

    Each iteration cuts the affinity graph restricted to still-unclaimed
    patches, takes the mean-thresholded side as foreground, and claims it.
    Iteration stops on the first cut that yields no significant foreground:
    too few patches, every active node, a near-complete graph (eigenvalue at
    ``degenerate_lambda`` or above), or a foreground with internal strong-edge
    fraction below ``min_cohesion``.

    When ``pixel_hw`` is given each proposal also carries a pixel mask,
    morphologically cleaned iff ``cfg.refine == "morph"``.
    """
    gh, gw = fmap.grid_h, fmap.grid_w
    excluded: set[int] = set()
    proposals: list[MaskProposal] = []
    for iteration in range(1, cfg.max_proposals + 1):
        if fmap.n_patches - len(excluded) < 2:
            break
        graph = build_affinity(fmap, cfg.tau_ncut, excluded)
        cut = second_eigvec(graph, cfg)
        if cut is None:
            break
        if cut.eigenvalue >= cfg.degenerate_lambda:
            break
        mask, flipped, reason = select_foreground(
            cut.x, gh, gw, cfg.corner_limit, active=cut.active
        )
        fg_count = int(mask.sum())
        if fg_count < cfg.min_patches:
            break
        if fg_count == int(cut.active.sum()):
            break
        if foreground_cohesion(graph, mask) < cfg.min_cohesion:
            break
        patch_mask = mask.reshape(gh, gw)
        pixel_mask = None
        if pixel_hw is not None:
            pixel_mask = upsample_mask(patch_mask, pixel_hw[0], pixel_hw[1])
            if cfg.refine == "morph":
                pixel_mask = refine_mask(pixel_mask, cfg.min_component_px)
        proposals.append(
            MaskProposal(
                image_id=fmap.image_id,
                patch_mask=patch_mask,
                iteration_index=iteration,
                config_id=cfg.preset_id,
                pixel_mask=pixel_mask,
            )
        )
        excluded.update(np.flatnonzero(mask).tolist())
    return proposals


def discover_many(
    fmaps: list[PatchFeatureMap],
    cfg: DiscoveryConfig,
    pixel_hw: tuple[int, int] | None = None,
    workers: int = 1,
) -> list[tuple[str, list[MaskProposal]]]:
    """Run discovery over many images; results come back sorted by image id."""
    ordered = sorted(fmaps, key=lambda f: f.image_id)
    if workers <= 1:
        results = [(f.image_id, discover(f, cfg, pixel_hw)) for f in ordered]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            proposal_lists = list(pool.map(lambda f: discover(f, cfg, pixel_hw), ordered))
        results = [(f.image_id, props) for f, props in zip(ordered, proposal_lists)]
    return results
