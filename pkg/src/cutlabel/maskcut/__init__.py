"""Iterative normalized-cut region discovery on patch affinity graphs."""

from cutlabel.maskcut.config import DiscoveryConfig, load_presets, write_presets
from cutlabel.maskcut.graph import WEAK_EDGE, AffinityGraph, build_affinity
from cutlabel.maskcut.eigen import CutResult, second_eigvec
from cutlabel.maskcut.discover import (
    discover,
    discover_many,
    foreground_cohesion,
    refine_mask,
    select_foreground,
    upsample_mask,
)
from cutlabel.maskcut.sweep import SweepRow, match_recall, sweep_recall

__all__ = [
    "AffinityGraph",
    "CutResult",
    "DiscoveryConfig",
    "SweepRow",
    "WEAK_EDGE",
    "build_affinity",
    "discover",
    "discover_many",
    "foreground_cohesion",
    "load_presets",
    "match_recall",
    "refine_mask",
    "second_eigvec",
    "select_foreground",
    "sweep_recall",
    "upsample_mask",
    "write_presets",
]
