"""Patch affinity graphs from cosine similarity.

Affinities are binarized: cosine at or above the threshold becomes a strong
unit edge, everything below becomes a weak tie-breaking edge, and excluded
nodes get their rows and columns zeroed so later cuts ignore regions that
were already claimed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from cutlabel.tensorstore import PatchFeatureMap

WEAK_EDGE = 1e-5


@dataclass
class AffinityGraph:
    n_nodes: int
    W: np.ndarray
    degrees: np.ndarray
    excluded: frozenset[int]

    @property
    def active(self) -> np.ndarray:
        """Boolean vector of nodes that still take part in cuts."""
        out = np.ones(self.n_nodes, dtype=bool)
        if self.excluded:
            out[list(self.excluded)] = False
        return out


def cosine_matrix(features: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarity; rows with zero norm behave as similarity 0."""
    feats = np.asarray(features, dtype=np.float64)
    norms = np.linalg.norm(feats, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = feats / safe[:, None]
    sims = unit @ unit.T
    return np.clip(sims, -1.0, 1.0)


def build_affinity(
    fmap: PatchFeatureMap,
    tau: float,
    excluded: Iterable[int] = (),
) -> AffinityGraph:
    """Build the thresholded affinity graph for one image.

    Args:
        fmap: patch features, row-major over the grid.
        tau: cosine threshold in (0, 1); the diagonal is thresholded like
            any other entry.
        excluded: node indices whose rows and columns are zeroed.

    Returns:
        AffinityGraph with symmetric ``W`` and per-node degree sums.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau {tau} outside (0, 1)")
    excluded_set = frozenset(int(i) for i in excluded)
    n = fmap.n_patches
    for idx in excluded_set:
        if not 0 <= idx < n:
            raise ValueError(f"excluded node {idx} out of range")
    sims = cosine_matrix(fmap.features)
    W = np.where(sims >= tau, 1.0, WEAK_EDGE)
    if excluded_set:
        gone = list(excluded_set)
        W[gone, :] = 0.0
        W[:, gone] = 0.0
    return AffinityGraph(
        n_nodes=n,
        W=W,
        degrees=W.sum(axis=1),
        excluded=excluded_set,
    )
