"""Run configuration for the batch commands and the annotation service.

A run is described by a flat config: where the dataset lives, where outputs
go, and the knobs for discovery, filtering, training, and aggregation.
Values come from dataclass defaults, then an optional JSON config file,
then explicit command-line flags, in that order of precedence.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from cutlabel.aggregate import AggregationPolicy
from cutlabel.errors import DataError
from cutlabel.labeler import TrainConfig
from cutlabel.maskcut import DiscoveryConfig, load_presets
from cutlabel.tensorstore import Manifest, read_manifest


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a subcommand needs, resolved and validated."""

    data_dir: Path
    out_dir: Path
    presets: Path | None = None
    pairs: Path | None = None
    mode: str = "soft"
    tau: float = 0.8
    global_mode: str = "none"
    report_threshold: float = 0.5
    hidden: int = 256
    activation: str = "relu"
    target_conf: float = 0.9
    iou_threshold: float = 0.5
    workers: int = 1
    seed: int = 0
    pixels_per_patch: int = 8
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self) -> None:
        object.__setattr__(self, "data_dir", Path(self.data_dir))
        object.__setattr__(self, "out_dir", Path(self.out_dir))
        if self.presets is not None:
            object.__setattr__(self, "presets", Path(self.presets))
        if self.pairs is not None:
            object.__setattr__(self, "pairs", Path(self.pairs))
        if not 0.0 < self.target_conf <= 1.0:
            raise ValueError("target_conf must be in (0, 1]")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.hidden < 1:
            raise ValueError("hidden must be positive")
        if self.pixels_per_patch < 1:
            raise ValueError("pixels_per_patch must be positive")
        self.policy  # noqa: B018 - validates the aggregation fields eagerly

    @property
    def policy(self) -> AggregationPolicy:
        return AggregationPolicy(
            mode=self.mode,
            tau=self.tau,
            global_mode=self.global_mode,
            report_threshold=self.report_threshold,
        )

    @property
    def manifest_path(self) -> Path:
        return self.data_dir / "manifest.tsv"

    @property
    def classes_path(self) -> Path:
        return self.data_dir / "classes.txt"

    @property
    def masks_dir(self) -> Path:
        return self.out_dir / "masks"

    @property
    def checkpoint_dir(self) -> Path:
        return self.out_dir / "head"

    @property
    def selected_path(self) -> Path:
        return self.out_dir / "selected.tsv"

    @property
    def labels_path(self) -> Path:
        return self.out_dir / "labels.tsv"

    @property
    def resolved_path(self) -> Path:
        return self.out_dir / "labels_resolved.tsv"

    @property
    def annotations_path(self) -> Path:
        return self.out_dir / "annotations.jsonl"


_TRAIN_FIELDS = {f.name for f in dataclasses.fields(TrainConfig)}
_CONFIG_FIELDS = {f.name for f in dataclasses.fields(PipelineConfig)} - {"train"}


def load_config_file(path: str | Path) -> dict:
    """Parse a JSON config file into a flat field dict plus a train dict."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"config file not found: {path}")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise DataError(f"{path}: config must be a JSON object")
    for key in payload:
        if key not in _CONFIG_FIELDS and key != "train":
            raise DataError(f"{path}: unknown config key {key!r}")
    train = payload.get("train", {})
    if not isinstance(train, dict):
        raise DataError(f"{path}: train section must be an object")
    for key in train:
        if key not in _TRAIN_FIELDS:
            raise DataError(f"{path}: unknown train key {key!r}")
    return payload


def build_config(
    file_values: dict | None, flag_values: dict, train_flags: dict
) -> PipelineConfig:
    """Merge config sources; explicit flags win over the file over defaults."""
    merged: dict = {}
    train: dict = {}
    if file_values:
        train.update(file_values.get("train", {}))
        merged.update({k: v for k, v in file_values.items() if k != "train"})
    merged.update({k: v for k, v in flag_values.items() if v is not None})
    train.update({k: v for k, v in train_flags.items() if v is not None})
    if "seed" in merged and "seed" not in train:
        train["seed"] = merged["seed"]
    missing = {"data_dir", "out_dir"} - merged.keys()
    if missing:
        raise ValueError(f"missing required settings: {', '.join(sorted(missing))}")
    return PipelineConfig(**merged, train=TrainConfig(**train))


def require_dataset(cfg: PipelineConfig) -> Manifest:
    """Load the manifest or fail with a data error."""
    if not cfg.manifest_path.exists():
        raise DataError(f"no dataset at {cfg.data_dir} (missing manifest.tsv)")
    return read_manifest(cfg.manifest_path)


def load_class_names(cfg: PipelineConfig) -> list[str]:
    if not cfg.classes_path.exists():
        raise DataError(f"missing class-name file {cfg.classes_path}")
    names = [ln for ln in cfg.classes_path.read_text().splitlines() if ln.strip()]
    if not names:
        raise DataError(f"{cfg.classes_path} lists no classes")
    return names


def load_discovery_presets(cfg: PipelineConfig) -> list[DiscoveryConfig]:
    """The preset ensemble from the config path, or the single default."""
    if cfg.presets is None:
        return [DiscoveryConfig()]
    return load_presets(cfg.presets)
