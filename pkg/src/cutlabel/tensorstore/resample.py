"""Resolution changes: bilinear resizing, mask projection, logit densify.

All coordinate mapping uses half-pixel centers: output pixel ``i`` samples
source position ``(i + 0.5) * in/out - 0.5``, clamped to the valid range, so
an identity resize reproduces the input exactly.
"""

from __future__ import annotations

import numpy as np

from cutlabel.tensorstore.types import LogitMap


def _axis_weights(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Source index pairs and blend weight for one axis."""
    scale = n_in / n_out
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, n_in - 1.0)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = src - lo
    return lo, hi, frac


def bilinear_resize(array: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize an ``(H, W)`` or ``(H, W, C)`` array with bilinear blending.

    Args:
        array: source values, finite floats.
        out_h: target height, positive.
        out_w: target width, positive.

    Returns:
        float64 array of shape ``(out_h, out_w[, C])``.
    """
    arr = np.asarray(array, dtype=np.float64)
    if arr.ndim not in (2, 3):
        raise ValueError("expected a 2-d or 3-d array")
    if out_h <= 0 or out_w <= 0:
        raise ValueError("output size must be positive")
    if not np.isfinite(arr).all():
        raise ValueError("non-finite input")
    squeeze = arr.ndim == 2
    if squeeze:
        arr = arr[:, :, None]
    y_lo, y_hi, fy = _axis_weights(arr.shape[0], out_h)
    x_lo, x_hi, fx = _axis_weights(arr.shape[1], out_w)
    top = arr[y_lo][:, x_lo] * (1.0 - fx)[None, :, None] + arr[y_lo][:, x_hi] * fx[None, :, None]
    bot = arr[y_hi][:, x_lo] * (1.0 - fx)[None, :, None] + arr[y_hi][:, x_hi] * fx[None, :, None]
    out = top * (1.0 - fy)[:, None, None] + bot * fy[:, None, None]
    return out[:, :, 0] if squeeze else out


def _footprints(n_pixels: int, n_cells: int) -> list[tuple[int, int]]:
    return [
        (int(np.floor(i * n_pixels / n_cells)), int(np.floor((i + 1) * n_pixels / n_cells)))
        for i in range(n_cells)
    ]


def project_mask(pixel_mask: np.ndarray, grid_h: int, grid_w: int) -> np.ndarray:
    """Downscale a pixel mask onto the patch grid by footprint coverage.

    A patch cell is set when at least half of its pixel footprint is
    foreground. Footprints come from the integer partition
    ``rows[i] = [floor(i*h/grid_h), floor((i+1)*h/grid_h))``.
    """
    mask = np.asarray(pixel_mask)
    if mask.ndim != 2:
        raise ValueError("pixel mask must be 2-d")
    h, w = mask.shape
    if grid_h <= 0 or grid_w <= 0 or grid_h > h or grid_w > w:
        raise ValueError(f"grid {grid_h}x{grid_w} incompatible with mask {h}x{w}")
    mask = mask != 0
    out = np.zeros((grid_h, grid_w), dtype=bool)
    rows = _footprints(h, grid_h)
    cols = _footprints(w, grid_w)
    for gy, (y0, y1) in enumerate(rows):
        for gx, (x0, x1) in enumerate(cols):
            cell = mask[y0:y1, x0:x1]
            out[gy, gx] = cell.mean() >= 0.5
    return out


def densify_logits(logit_map: LogitMap) -> np.ndarray:
    """Expand a sparse top-k logit map to a dense ``(cell_h, cell_w, K)`` array.

    Classes absent from a cell's top-k list densify to exactly zero.
    """
    dense = np.zeros(
        (logit_map.cell_h, logit_map.cell_w, logit_map.classes), dtype=np.float64
    )
    if logit_map.k == 0:
        return dense
    rows = np.arange(logit_map.cell_h)[:, None, None]
    cols = np.arange(logit_map.cell_w)[None, :, None]
    dense[rows, cols, logit_map.indices] = logit_map.logits
    return dense


def sparsify_topk(dense: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Keep each cell's k largest logits; ties resolve to the lower class index.

    Returns ``(indices, logits)`` of shape ``(cell_h, cell_w, k)``, ordered by
    descending logit within each cell.
    """
    arr = np.asarray(dense, dtype=np.float64)
    if arr.ndim != 3:
        raise ValueError("dense map must be (cell_h, cell_w, K)")
    classes = arr.shape[2]
    if not 0 <= k <= classes:
        raise ValueError(f"k={k} outside [0, {classes}]")
    ch, cw, _ = arr.shape
    indices = np.zeros((ch, cw, k), dtype=np.int64)
    logits = np.zeros((ch, cw, k), dtype=np.float64)
    for y in range(ch):
        for x in range(cw):
            order = sorted(range(classes), key=lambda c: (-arr[y, x, c], c))[:k]
            indices[y, x] = order
            logits[y, x] = arr[y, x, order]
    return indices, logits
