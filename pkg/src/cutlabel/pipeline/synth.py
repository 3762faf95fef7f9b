"""Synthetic planted-cluster datasets.

Each image is a patch grid of unit-norm noise with a few disjoint rectangles
overwritten by per-class prototype features. Prototypes are orthonormal, so
within-cluster cosine sits near 1 while cluster/background and cross-cluster
cosines stay near 0, giving discovery unambiguous regions with exact ground
truth. The single original label of an image is the class of its largest
planted rectangle; the remaining rectangles are exactly the labels a
relabeling pass should recover.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from cutlabel.tensorstore import (
    LogitMap,
    Manifest,
    ManifestEntry,
    PatchFeatureMap,
    rle_encode,
    sparsify_topk,
    write_manifest,
    write_tensor,
)

_NATO = (
    "alpha bravo charlie delta echo foxtrot golf hotel india juliett kilo lima "
    "mike november oscar papa quebec romeo sierra tango uniform victor whiskey "
    "xray yankee zulu"
).split()

# Rectangle size options per planted slot. Areas stay pairwise distinct
# across slots (36..42 vs 24..25 vs 12) so the cut never faces two regions
# of identical volume.
_SIZE_SLOTS = (
    ((6, 7), (7, 6), (6, 6)),
    ((5, 5), (4, 6), (6, 4)),
    ((3, 4), (4, 3)),
)


def class_names(classes: int) -> list[str]:
    if classes <= len(_NATO):
        return _NATO[:classes]
    return [f"class_{i:03d}" for i in range(classes)]


def make_prototypes(rng: np.random.Generator, classes: int, dim: int) -> np.ndarray:
    """Orthonormal class prototypes, one row per class."""
    if classes > dim:
        raise ValueError(f"cannot fit {classes} orthonormal prototypes in dim {dim}")
    q, _ = np.linalg.qr(rng.standard_normal((dim, classes)))
    return q.T.copy()


@dataclass
class PlantedImage:
    fmap: PatchFeatureMap
    regions: list[tuple[int, np.ndarray]]  # (class_id, patch mask), largest first
    label: int  # class of the largest region; -1 for uniform images

    @property
    def gt_classes(self) -> list[int]:
        return sorted({cls for cls, _ in self.regions})


def plant_image(
    rng: np.random.Generator,
    prototypes: np.ndarray,
    image_id: str,
    n_clusters: int,
    grid_h: int = 16,
    grid_w: int = 16,
    sizes: list[tuple[int, int]] | None = None,
    cluster_noise: float = 0.02,
) -> PlantedImage:
    """Plant ``n_clusters`` disjoint rectangles over unit-norm noise patches.

    Rectangles keep one patch of margin from the border and from each other.
    """
    if not 1 <= n_clusters <= len(_SIZE_SLOTS) and sizes is None:
        raise ValueError(f"n_clusters must be in 1..{len(_SIZE_SLOTS)}")
    dim = prototypes.shape[1]
    if sizes is None:
        sizes = [
            _SIZE_SLOTS[slot][int(rng.integers(len(_SIZE_SLOTS[slot])))]
            for slot in range(n_clusters)
        ]
    chosen = rng.choice(len(prototypes), size=len(sizes), replace=False)
    regions: list[tuple[int, np.ndarray]] = []
    for _ in range(50):
        occupied = np.zeros((grid_h, grid_w), dtype=bool)
        regions = []
        for cls, (rh, rw) in zip(chosen, sizes):
            slots = [
                (r0, c0)
                for r0 in range(1, grid_h - rh)
                for c0 in range(1, grid_w - rw)
                if not occupied[r0 - 1 : r0 + rh + 1, c0 - 1 : c0 + rw + 1].any()
            ]
            if not slots:
                regions = []
                break
            r0, c0 = slots[int(rng.integers(len(slots)))]
            rect = np.zeros((grid_h, grid_w), dtype=bool)
            rect[r0 : r0 + rh, c0 : c0 + rw] = True
            occupied |= rect
            regions.append((int(cls), rect))
        if regions:
            break
    if not regions:
        raise RuntimeError(f"{image_id}: could not place {len(sizes)} rectangles")
    feats = rng.standard_normal((grid_h * grid_w, dim))
    feats /= np.linalg.norm(feats, axis=1, keepdims=True)
    for cls, rect in regions:
        idx = np.flatnonzero(rect.ravel())
        feats[idx] = prototypes[cls] + cluster_noise * rng.standard_normal((idx.size, dim))
    fmap = PatchFeatureMap(image_id, grid_h, grid_w, dim, feats.astype(np.float32), source_tag="synth")
    regions.sort(key=lambda pair: (-int(pair[1].sum()), pair[0]))
    return PlantedImage(fmap=fmap, regions=regions, label=regions[0][0])


def uniform_image(
    rng: np.random.Generator,
    prototypes: np.ndarray,
    image_id: str,
    grid_h: int = 16,
    grid_w: int = 16,
) -> PlantedImage:
    """A structureless image: every patch carries the same feature vector."""
    cls = int(rng.integers(len(prototypes)))
    feats = np.tile(prototypes[cls], (grid_h * grid_w, 1))
    fmap = PatchFeatureMap(image_id, grid_h, grid_w, prototypes.shape[1], feats.astype(np.float32), source_tag="synth")
    return PlantedImage(fmap=fmap, regions=[], label=cls)


def planted_logit_map(
    planted: PlantedImage,
    classes: int,
    cell_h: int = 15,
    cell_w: int = 15,
    k: int = 5,
    peak: float = 8.0,
) -> LogitMap:
    """Ground-truth-shaped logit map: each planted cell spikes its class."""
    gh, gw = planted.fmap.grid_h, planted.fmap.grid_w
    dense = np.zeros((cell_h, cell_w, classes))
    for cls, rect in planted.regions:
        # paint the cell whose footprint center falls inside the rectangle
        for cy in range(cell_h):
            for cx in range(cell_w):
                gy = int(np.floor((cy + 0.5) * gh / cell_h))
                gx = int(np.floor((cx + 0.5) * gw / cell_w))
                if rect[gy, gx]:
                    dense[cy, cx, cls] = peak
    if planted.label >= 0 and not planted.regions:
        dense[:, :, planted.label] = peak
    kk = min(k, classes)
    indices, logits = sparsify_topk(dense, kk)
    return LogitMap(
        image_id=planted.fmap.image_id,
        cell_h=cell_h,
        cell_w=cell_w,
        k=kk,
        classes=classes,
        indices=indices,
        logits=logits,
    )


def _preview_array(planted: PlantedImage, classes: int, px: int = 8) -> np.ndarray:
    import colorsys

    gh, gw = planted.fmap.grid_h, planted.fmap.grid_w
    img = np.full((gh * px, gw * px, 3), 52, dtype=np.uint8)
    for cls, rect in planted.regions:
        rgb = colorsys.hsv_to_rgb(cls / max(classes, 1), 0.65, 0.9)
        color = np.array([int(c * 255) for c in rgb], dtype=np.uint8)
        mask = np.kron(rect, np.ones((px, px), dtype=bool))
        img[mask] = color
    return img


@dataclass
class SynthSpec:
    images: int = 40
    classes: int = 8
    dim: int = 64
    grid_h: int = 16
    grid_w: int = 16
    pixels_per_patch: int = 8
    uniform_images: int = 0
    seed: int = 0
    logit_cells: int = 15
    logit_k: int = 5


def synth_dataset(out_dir: str | Path, spec: SynthSpec, previews: bool = False) -> Manifest:
    """Write a full synthetic dataset under ``out_dir``.

    Produces feature tensors, logit maps, a manifest, class names, the
    multi-label ground truth, and pixel-level ground-truth masks.
    """
    out = Path(out_dir)
    (out / "features").mkdir(parents=True, exist_ok=True)
    (out / "logits").mkdir(exist_ok=True)
    if previews:
        (out / "previews").mkdir(exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    protos = make_prototypes(rng, spec.classes, spec.dim)
    names = class_names(spec.classes)
    (out / "classes.txt").write_text("\n".join(names) + "\n")

    entries: list[ManifestEntry] = []
    gt_label_lines: list[str] = []
    gt_mask_lines: list[str] = []
    px_h = spec.grid_h * spec.pixels_per_patch
    px_w = spec.grid_w * spec.pixels_per_patch
    total = spec.images + spec.uniform_images
    for i in range(total):
        image_id = f"img_{i:04d}"
        if i < spec.images:
            n_clusters = int(rng.integers(1, 4))
            planted = plant_image(
                rng, protos, image_id, n_clusters, spec.grid_h, spec.grid_w
            )
        else:
            planted = uniform_image(rng, protos, image_id, spec.grid_h, spec.grid_w)
        feat_path = out / "features" / f"{image_id}.tf"
        write_tensor(
            feat_path,
            planted.fmap.features.reshape(spec.grid_h, spec.grid_w, spec.dim),
        )
        lm = planted_logit_map(
            planted, spec.classes, spec.logit_cells, spec.logit_cells, spec.logit_k
        )
        logit_path = out / "logits" / f"{image_id}.tf"
        write_logit_map(logit_path, lm)
        preview_path = None
        if previews:
            from PIL import Image

            preview_path = out / "previews" / f"{image_id}.png"
            Image.fromarray(_preview_array(planted, spec.classes, spec.pixels_per_patch)).save(
                preview_path
            )
        entries.append(
            ManifestEntry(
                image_id=image_id,
                features=feat_path,
                logits=logit_path,
                label=planted.label,
                preview=preview_path,
            )
        )
        gt = planted.gt_classes if planted.regions else [planted.label]
        gt_label_lines.append(image_id + "\t" + ",".join(str(c) for c in gt))
        for cls, rect in planted.regions:
            pixel = np.kron(rect, np.ones((spec.pixels_per_patch, spec.pixels_per_patch), dtype=bool))
            gt_mask_lines.append(f"{image_id}\t{cls}\t{rle_encode(pixel)}")

    manifest = Manifest(root=out, entries=entries)
    write_manifest(out / "manifest.tsv", manifest)
    (out / "gt_labels.txt").write_text("\n".join(gt_label_lines) + "\n")
    (out / "gt_masks.txt").write_text("\n".join(gt_mask_lines) + "\n")
    return manifest


def write_logit_map(path: str | Path, lm: LogitMap) -> None:
    """Store a sparse logit map as one stacked tensor: [indices, logits]."""
    stacked = np.stack([lm.indices.astype(np.float32), lm.logits.astype(np.float32)])
    write_tensor(path, stacked)


def read_logit_map(path: str | Path, image_id: str, classes: int) -> LogitMap:
    """Inverse of :func:`write_logit_map`; needs the class count from context."""
    from cutlabel.errors import DataError
    from cutlabel.tensorstore import read_tensor

    stacked = read_tensor(path)
    if stacked.ndim != 4 or stacked.shape[0] != 2:
        raise DataError(f"{path}: expected shape (2, cells, cells, k)")
    indices = stacked[0]
    rounded = np.rint(indices)
    if not np.allclose(indices, rounded, atol=1e-6):
        raise DataError(f"{path}: non-integer class indices")
    _, ch, cw, k = stacked.shape
    return LogitMap(
        image_id=image_id,
        cell_h=ch,
        cell_w=cw,
        k=k,
        classes=classes,
        indices=rounded.astype(np.int64),
        logits=stacked[1].astype(np.float32),
    )
