"""Run-length coding for binary masks.

The canonical form flattens the mask row-major and stores alternating run
lengths that always start with a zero-run, so a mask beginning with a set
cell starts with a literal ``0``. Text layout: ``{h}x{w}:{run,run,...}``.
"""

from __future__ import annotations

import numpy as np

from cutlabel.errors import DataError


def rle_encode(mask: np.ndarray) -> str:
    """Encode a 2-d binary mask into its canonical run-length string."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ValueError("mask must be 2-d")
    flat = (arr != 0).ravel()
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate([[0], change, [flat.size]])
    runs: list[int] = []
    if flat.size and flat[0]:
        runs.append(0)
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        runs.append(int(hi - lo))
    if not runs:
        runs = [0]
    h, w = arr.shape
    return f"{h}x{w}:" + ",".join(str(r) for r in runs)


def rle_decode(text: str) -> np.ndarray:
    """Decode a canonical run-length string back into a boolean mask.

    Raises :class:`DataError` for anything structurally off: bad shape
    header, non-integer runs, or runs that do not sum to ``h * w``.
    """
    head, sep, body = text.partition(":")
    if not sep:
        raise DataError(f"run-length string missing shape header: {text!r}")
    try:
        h_str, w_str = head.split("x")
        h, w = int(h_str), int(w_str)
    except ValueError as exc:
        raise DataError(f"bad shape header {head!r}") from exc
    if h <= 0 or w <= 0:
        raise DataError(f"non-positive mask shape {h}x{w}")
    try:
        runs = [int(tok) for tok in body.split(",")] if body else []
    except ValueError as exc:
        raise DataError(f"non-integer run in {body!r}") from exc
    if not runs:
        raise DataError("empty run list")
    if any(r < 0 for r in runs):
        raise DataError("negative run length")
    if sum(runs) != h * w:
        raise DataError(f"runs sum to {sum(runs)}, expected {h * w}")
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    value = False
    for run in runs:
        if value:
            flat[pos : pos + run] = True
        pos += run
        value = not value
    return flat.reshape(h, w)
