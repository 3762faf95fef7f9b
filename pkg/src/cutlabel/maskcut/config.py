"""Discovery presets: thresholds, iteration budget, refinement choice."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from cutlabel.errors import DataError

_REFINE_MODES = ("none", "morph")
_EIGENSOLVERS = ("dense", "lanczos")


@dataclass(frozen=True)
class DiscoveryConfig:
    """One discovery configuration.

    ``tau_ncut`` binarizes patch cosine affinities, ``max_proposals`` caps the
    number of cut iterations per image, and ``min_patches`` is the smallest
    foreground worth keeping. ``degenerate_lambda`` and ``min_cohesion`` stop
    iteration when the remaining graph has no salient cut left: a
    second-smallest eigenvalue that high only occurs when the thresholded
    graph is essentially complete, and a foreground whose members are mostly
    weak-linked to each other is leftover noise rather than a region.
    """

    preset_id: str = "default"
    tau_ncut: float = 0.5
    max_proposals: int = 3
    min_patches: int = 9
    refine: str = "none"
    eigensolver: str = "lanczos"
    lanczos_tol: float = 0.0
    lanczos_max_iter: int = 10000
    corner_limit: int = 2
    min_cohesion: float = 0.2
    degenerate_lambda: float = 0.95
    min_component_px: int = 4

    def __post_init__(self) -> None:
        if not 0.0 < self.tau_ncut < 1.0:
            raise ValueError(f"tau_ncut {self.tau_ncut} outside (0, 1)")
        if self.max_proposals < 1:
            raise ValueError("max_proposals must be at least 1")
        if self.min_patches < 1:
            raise ValueError("min_patches must be at least 1")
        if self.refine not in _REFINE_MODES:
            raise ValueError(f"refine must be one of {_REFINE_MODES}")
        if self.eigensolver not in _EIGENSOLVERS:
            raise ValueError(f"eigensolver must be one of {_EIGENSOLVERS}")
        if not 0 <= self.corner_limit <= 4:
            raise ValueError("corner_limit must be within 0..4")
        if self.lanczos_tol < 0 or self.lanczos_max_iter < 1:
            raise ValueError("bad iterative-solver settings")


def write_presets(path: str | Path, presets: list[DiscoveryConfig]) -> None:
    payload = [asdict(p) for p in presets]
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_presets(path: str | Path) -> list[DiscoveryConfig]:
    """Load an ensemble of presets from a JSON list of objects."""
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read presets from {path}: {exc}") from exc
    if not isinstance(payload, list) or not payload:
        raise DataError(f"{path}: presets file must hold a non-empty list")
    presets = []
    seen = set()
    for item in payload:
        if not isinstance(item, dict):
            raise DataError(f"{path}: preset entries must be objects")
        try:
            preset = DiscoveryConfig(**item)
        except (TypeError, ValueError) as exc:
            raise DataError(f"{path}: bad preset {item!r}: {exc}") from exc
        if preset.preset_id in seen:
            raise DataError(f"{path}: duplicate preset_id {preset.preset_id!r}")
        seen.add(preset.preset_id)
        presets.append(preset)
    return presets
