"""Region pooling: masked feature averages, masked logit scores, box sampling."""

from __future__ import annotations

import numpy as np

from cutlabel.labeler.head import softmax
from cutlabel.tensorstore import PatchFeatureMap


def masked_pool(
    fmap: PatchFeatureMap,
    patch_mask: np.ndarray,
    dropout_frac: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Mean feature over foreground patches, optionally dropping a fraction.

    The drop count is floor(dropout_frac * |M|), capped so at least one
    patch always survives. Inference passes dropout_frac=0.
    """
    mask = np.asarray(patch_mask, dtype=bool)
    if mask.shape != (fmap.grid_h, fmap.grid_w):
        raise ValueError("mask shape does not match the patch grid")
    idx = np.flatnonzero(mask.ravel())
    if idx.size == 0:
        raise ValueError("empty mask")
    if not 0.0 <= dropout_frac < 1.0:
        raise ValueError("dropout_frac must be in [0, 1)")
    if dropout_frac > 0.0:
        n_drop = min(int(np.floor(dropout_frac * idx.size)), idx.size - 1)
        if n_drop > 0:
            if rng is None:
                raise ValueError("dropout requires an rng")
            dropped = rng.choice(idx.size, size=n_drop, replace=False)
            idx = np.delete(idx, dropped)
    return fmap.features[idx].astype(np.float64).mean(axis=0)


def pooled_logit_score(mask: np.ndarray, dense_logits: np.ndarray) -> np.ndarray:
    """Softmax of the per-class logit average over foreground cells."""
    mask = np.asarray(mask, dtype=bool)
    z = np.asarray(dense_logits, dtype=np.float64)
    if z.ndim != 3 or mask.shape != z.shape[:2]:
        raise ValueError("mask and logit grid shapes disagree")
    if not np.isfinite(z).all():
        raise ValueError("non-finite logits")
    if not mask.any():
        raise ValueError("empty mask")
    v = z[mask].mean(axis=0)
    return softmax(v)


def box_pool(fmap: PatchFeatureMap, box: tuple[float, float, float, float], samples: int = 7) -> np.ndarray:
    """Mean feature over an S x S bilinear sample grid inside a normalized box.

    The box is (x0, y0, x1, y1) in [0, 1] image coordinates; sample points
    map to feature coordinates via u = t * grid - 0.5, clamped to the grid.
    """
    x0, y0, x1, y1 = (float(v) for v in box)
    if not (0.0 <= x0 < x1 <= 1.0 and 0.0 <= y0 < y1 <= 1.0):
        raise ValueError(f"degenerate or out-of-range box {box}")
    if samples < 1:
        raise ValueError("samples must be positive")
    gh, gw = fmap.grid_h, fmap.grid_w
    grid = fmap.features.reshape(gh, gw, fmap.dim).astype(np.float64)
    ty = y0 + (np.arange(samples) + 0.5) * (y1 - y0) / samples
    tx = x0 + (np.arange(samples) + 0.5) * (x1 - x0) / samples
    uy = np.clip(ty * gh - 0.5, 0.0, gh - 1.0)
    ux = np.clip(tx * gw - 0.5, 0.0, gw - 1.0)
    yy = np.repeat(uy, samples)
    xx = np.tile(ux, samples)
    y0i = np.floor(yy).astype(int)
    x0i = np.floor(xx).astype(int)
    y1i = np.minimum(y0i + 1, gh - 1)
    x1i = np.minimum(x0i + 1, gw - 1)
    fy = (yy - y0i)[:, None]
    fx = (xx - x0i)[:, None]
    vals = (
        grid[y0i, x0i] * (1 - fy) * (1 - fx)
        + grid[y0i, x1i] * (1 - fy) * fx
        + grid[y1i, x0i] * fy * (1 - fx)
        + grid[y1i, x1i] * fy * fx
    )
    return vals.mean(axis=0)
