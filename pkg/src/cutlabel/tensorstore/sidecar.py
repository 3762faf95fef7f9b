"""Text sidecars: per-image label records and the dataset manifest.

Label sidecars keep one tab-separated record per image. Scores are written
with ``repr`` so reading a record back reproduces the floats bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from cutlabel.errors import DataError
from cutlabel.tensorstore.types import Grounding, ImageLabelSet

_LABEL_HEADER = "#cutlabel-labels"


def _format_soft(soft: np.ndarray) -> str:
    parts = [f"{c}:{float(soft[c])!r}" for c in np.flatnonzero(soft > 0.0)]
    return ",".join(parts) if parts else "-"


def _format_hard(hard: np.ndarray | None) -> str:
    if hard is None:
        return "-"
    return "h:" + ",".join(str(c) for c in np.flatnonzero(hard))


def _format_groundings(groundings: dict[int, Grounding]) -> str:
    if not groundings:
        return "-"
    parts = [
        f"{c}:{float(g.confidence)!r}:{g.mask_rle}"
        for c, g in sorted(groundings.items())
    ]
    return "|".join(parts)


def write_label_sidecar(path: str | Path, records: list[ImageLabelSet], classes: int) -> None:
    """Write label records, sorted by image id for stable output."""
    for rec in records:
        if rec.classes != classes:
            raise ValueError(f"{rec.image_id}: has {rec.classes} classes, expected {classes}")
    lines = [f"{_LABEL_HEADER}\tK={classes}"]
    for rec in sorted(records, key=lambda r: r.image_id):
        lines.append(
            "\t".join(
                [
                    rec.image_id,
                    rec.strategy_tag,
                    _format_soft(rec.soft),
                    _format_hard(rec.hard),
                    _format_groundings(rec.groundings),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_soft(field: str, classes: int, where: str) -> np.ndarray:
    soft = np.zeros(classes, dtype=np.float64)
    if field == "-":
        return soft
    for part in field.split(","):
        cls_str, sep, score_str = part.partition(":")
        if not sep:
            raise DataError(f"{where}: bad soft entry {part!r}")
        try:
            cls, score = int(cls_str), float(score_str)
        except ValueError as exc:
            raise DataError(f"{where}: bad soft entry {part!r}") from exc
        if not 0 <= cls < classes:
            raise DataError(f"{where}: class {cls} out of range")
        soft[cls] = score
    return soft


def _parse_hard(field: str, classes: int, where: str) -> np.ndarray | None:
    if field == "-":
        return None
    if not field.startswith("h:"):
        raise DataError(f"{where}: bad hard field {field!r}")
    hard = np.zeros(classes, dtype=bool)
    body = field[2:]
    if body:
        for tok in body.split(","):
            try:
                cls = int(tok)
            except ValueError as exc:
                raise DataError(f"{where}: bad hard entry {tok!r}") from exc
            if not 0 <= cls < classes:
                raise DataError(f"{where}: class {cls} out of range")
            hard[cls] = True
    return hard


def _parse_groundings(field: str, classes: int, where: str) -> dict[int, Grounding]:
    if field == "-":
        return {}
    out: dict[int, Grounding] = {}
    for part in field.split("|"):
        pieces = part.split(":", 2)
        if len(pieces) != 3:
            raise DataError(f"{where}: bad grounding {part!r}")
        try:
            cls, conf = int(pieces[0]), float(pieces[1])
        except ValueError as exc:
            raise DataError(f"{where}: bad grounding {part!r}") from exc
        if not 0 <= cls < classes:
            raise DataError(f"{where}: class {cls} out of range")
        out[cls] = Grounding(mask_rle=pieces[2], confidence=conf)
    return out


def read_label_sidecar(path: str | Path) -> tuple[list[ImageLabelSet], int]:
    """Read label records; returns ``(records, class_count)``."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith(_LABEL_HEADER):
        raise DataError(f"{path}: missing label sidecar header")
    try:
        classes = int(lines[0].split("K=", 1)[1])
    except (IndexError, ValueError) as exc:
        raise DataError(f"{path}: bad header {lines[0]!r}") from exc
    records = []
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 5:
            raise DataError(f"{path}:{n}: expected 5 fields, got {len(fields)}")
        where = f"{path}:{n}"
        records.append(
            ImageLabelSet(
                image_id=fields[0],
                strategy_tag=fields[1],
                soft=_parse_soft(fields[2], classes, where),
                hard=_parse_hard(fields[3], classes, where),
                groundings=_parse_groundings(fields[4], classes, where),
            )
        )
    return records, classes


@dataclass
class ManifestEntry:
    """One dataset row: feature tensor, optional logit map, original label."""

    image_id: str
    features: Path | None
    logits: Path | None = None
    label: int | None = None
    preview: Path | None = None


@dataclass
class Manifest:
    root: Path
    entries: list[ManifestEntry]

    def __post_init__(self) -> None:
        ids = [e.image_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate image ids in manifest")
        self.entries.sort(key=lambda e: e.image_id)
        self.by_id = {e.image_id: e for e in self.entries}


def _rel(path: Path | None, root: Path) -> str:
    if path is None:
        return "-"
    try:
        return str(Path(path).relative_to(root))
    except ValueError:
        return str(path)


def write_manifest(path: str | Path, manifest: Manifest) -> None:
    path = Path(path)
    root = path.parent
    lines = []
    for e in manifest.entries:
        label = "-" if e.label is None else str(e.label)
        lines.append(
            "\t".join(
                [e.image_id, _rel(e.features, root), _rel(e.logits, root), label, _rel(e.preview, root)]
            )
        )
    path.write_text("\n".join(lines) + "\n")


def read_manifest(path: str | Path) -> Manifest:
    """Read a tab-separated manifest; relative paths resolve next to the file."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"manifest not found: {path}")
    root = path.parent
    entries = []
    for n, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 5:
            raise DataError(f"{path}:{n}: expected 5 fields, got {len(fields)}")
        image_id, feat, logit, label, preview = fields

        def resolve(tok: str) -> Path | None:
            return None if tok == "-" else (root / tok if not Path(tok).is_absolute() else Path(tok))

        try:
            parsed_label = None if label == "-" else int(label)
        except ValueError as exc:
            raise DataError(f"{path}:{n}: bad label {label!r}") from exc
        entries.append(
            ManifestEntry(
                image_id=image_id,
                features=resolve(feat),
                logits=resolve(logit),
                label=parsed_label,
                preview=resolve(preview),
            )
        )
    return Manifest(root=root, entries=entries)
