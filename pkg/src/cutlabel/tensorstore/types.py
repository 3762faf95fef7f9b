"""In-memory record types shared across the pipeline stages."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


@dataclass
class PatchFeatureMap:
    """Per-patch backbone features for one image, row-major over the grid.

    ``features`` has shape ``(grid_h * grid_w, dim)``; row ``r * grid_w + c``
    holds the feature of the patch at grid position ``(r, c)``.
    """

    image_id: str
    grid_h: int
    grid_w: int
    dim: int
    features: np.ndarray
    source_tag: str = ""

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float32)
        _require(self.grid_h >= 2 and self.grid_w >= 2, "grid must be at least 2x2")
        _require(
            self.features.shape == (self.grid_h * self.grid_w, self.dim),
            f"feature shape {self.features.shape} does not match "
            f"grid {self.grid_h}x{self.grid_w} with dim {self.dim}",
        )
        _require(bool(np.isfinite(self.features).all()), "features must be finite")

    @property
    def n_patches(self) -> int:
        return self.grid_h * self.grid_w


@dataclass
class LogitMap:
    """Sparse top-k class logits on a coarse cell grid.

    ``indices`` and ``logits`` both have shape ``(cell_h, cell_w, k)``.
    Class indices within one cell are distinct and live in ``[0, classes)``.
    """

    image_id: str
    cell_h: int
    cell_w: int
    k: int
    classes: int
    indices: np.ndarray
    logits: np.ndarray

    def __post_init__(self) -> None:
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.logits = np.asarray(self.logits, dtype=np.float32)
        shape = (self.cell_h, self.cell_w, self.k)
        _require(self.cell_h >= 1 and self.cell_w >= 1, "cell grid must be non-empty")
        _require(self.k >= 0, "k must be non-negative")
        _require(self.classes >= 1, "need at least one class")
        _require(self.indices.shape == shape, f"indices shape must be {shape}")
        _require(self.logits.shape == shape, f"logits shape must be {shape}")
        _require(bool(np.isfinite(self.logits).all()), "logits must be finite")
        if self.k > 0:
            _require(
                bool((self.indices >= 0).all() and (self.indices < self.classes).all()),
                "class indices out of range",
            )
            flat = self.indices.reshape(-1, self.k)
            uniq = np.array([len(set(row.tolist())) for row in flat])
            _require(bool((uniq == self.k).all()), "duplicate class index within a cell")


@dataclass
class MaskProposal:
    """One discovered region: a binary patch-grid mask plus provenance."""

    image_id: str
    patch_mask: np.ndarray
    iteration_index: int
    config_id: str = ""
    pixel_mask: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.patch_mask = np.asarray(self.patch_mask, dtype=bool)
        _require(self.patch_mask.ndim == 2, "patch_mask must be 2-d")
        _require(bool(self.patch_mask.any()), "patch_mask must be non-empty")
        _require(self.iteration_index >= 1, "iteration_index is 1-based")
        if self.pixel_mask is not None:
            self.pixel_mask = np.asarray(self.pixel_mask, dtype=bool)
            _require(self.pixel_mask.ndim == 2, "pixel_mask must be 2-d")

    @property
    def patch_count(self) -> int:
        return int(self.patch_mask.sum())


@dataclass(frozen=True)
class Grounding:
    """Mask evidence for one class of a label set."""

    mask_rle: str
    confidence: float


@dataclass
class ImageLabelSet:
    """Image-level label vector with optional hard bits and mask groundings."""

    image_id: str
    soft: np.ndarray
    strategy_tag: str
    hard: np.ndarray | None = None
    groundings: dict[int, Grounding] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.soft = np.asarray(self.soft, dtype=np.float64)
        _require(self.soft.ndim == 1, "soft must be a vector")
        _require(
            bool((self.soft >= 0.0).all() and (self.soft <= 1.0).all()),
            "soft scores must lie in [0, 1]",
        )
        if self.hard is not None:
            self.hard = np.asarray(self.hard, dtype=bool)
            _require(self.hard.shape == self.soft.shape, "hard/soft shape mismatch")
        for cls, g in self.groundings.items():
            _require(0 <= cls < self.soft.size, f"grounding class {cls} out of range")
            _require(
                0.0 <= float(g.confidence) <= float(self.soft[cls]),
                f"grounding confidence for class {cls} must not exceed its soft score",
            )

    @property
    def classes(self) -> int:
        return int(self.soft.size)
