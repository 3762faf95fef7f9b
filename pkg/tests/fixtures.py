"""Shared planted-cluster fixtures built on the synthetic dataset generator."""

from __future__ import annotations

import numpy as np

from cutlabel.pipeline.synth import make_prototypes, plant_image


def planted_prototypes(rng: np.random.Generator, classes: int, dim: int) -> np.ndarray:
    return make_prototypes(rng, classes, dim)


def planted_image(
    rng: np.random.Generator,
    protos: np.ndarray,
    image_id: str,
    n_clusters: int,
    sizes: list[tuple[int, int]] | None = None,
):
    """Returns (feature map, list of patch rect masks, list of class ids)."""
    planted = plant_image(rng, protos, image_id, n_clusters, sizes=sizes)
    rects = [rect for _, rect in planted.regions]
    classes = [cls for cls, _ in planted.regions]
    return planted.fmap, rects, classes
