"""Batch subcommands: each reads files, writes files, and returns a summary.

Every command is deterministic for a fixed config and seed: inputs are
processed in sorted order, random draws come from seeds derived from the
run seed, and output files are byte-stable across reruns.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Iterator

import numpy as np

from cutlabel.aggregate import (
    ScoredMask,
    build_local,
    format_label_stats,
    label_stats,
    merge_global,
)
from cutlabel.errors import DataError
from cutlabel.labeler import (
    LabelerHead,
    config_digest,
    load_checkpoint,
    masked_pool,
    predict_region,
    save_checkpoint,
    train,
    train_accuracy,
)
from cutlabel.labeler.infer import filter_proposals
from cutlabel.maskcut import discover
from cutlabel.metrics import (
    EvalRecord,
    format_subgroup_table,
    knn_entropy,
    mean_ap,
    subgroup_map,
    top1_accuracy,
)
from cutlabel.pipeline.config import (
    PipelineConfig,
    load_class_names,
    load_discovery_presets,
    require_dataset,
)
from cutlabel.pipeline.synth import SynthSpec, read_logit_map, synth_dataset
from cutlabel.resolver import (
    CalibRecord,
    apply_pairing,
    derive_thresholds,
    mine_pairs,
    read_cooccurrence_tsv,
    solve_upgrade_counts,
    write_thresholds,
)
from cutlabel.tensorstore import (
    Manifest,
    MaskProposal,
    PatchFeatureMap,
    bilinear_resize,
    densify_logits,
    read_label_sidecar,
    read_tensor,
    rle_decode,
    rle_encode,
    write_label_sidecar,
)
from cutlabel.maskcut.sweep import sweep_recall


def load_feature_map(path: Path, image_id: str) -> PatchFeatureMap:
    """Read a ``(grid_h, grid_w, dim)`` tensor into a patch feature map."""
    arr = read_tensor(path)
    if arr.ndim != 3:
        raise DataError(f"{path}: expected a rank-3 feature tensor, got rank {arr.ndim}")
    gh, gw, dim = arr.shape
    return PatchFeatureMap(
        image_id=image_id, grid_h=gh, grid_w=gw, dim=dim,
        features=arr.reshape(gh * gw, dim),
    )


def cmd_synth(
    cfg: PipelineConfig,
    images: int = 40,
    classes: int = 8,
    dim: int = 64,
    uniform_images: int = 0,
    previews: bool = False,
) -> str:
    """Generate the synthetic planted-cluster dataset under the data dir."""
    spec = SynthSpec(
        images=images, classes=classes, dim=dim,
        uniform_images=uniform_images, seed=cfg.seed,
        pixels_per_patch=cfg.pixels_per_patch,
    )
    manifest = synth_dataset(cfg.data_dir, spec, previews=previews)
    return f"wrote {len(manifest.entries)} images to {cfg.data_dir}"


def _mask_file(cfg: PipelineConfig, image_id: str) -> Path:
    return cfg.masks_dir / f"{image_id}.masks.txt"


def _write_masks(path: Path, proposals: list[MaskProposal]) -> None:
    lines = []
    for p in proposals:
        pixel = "-" if p.pixel_mask is None else rle_encode(p.pixel_mask)
        lines.append(
            f"{p.config_id}\t{p.iteration_index}\t{rle_encode(p.patch_mask)}\t{pixel}"
        )
    path.write_text("\n".join(lines) + "\n" if lines else "")


def read_masks(path: Path, image_id: str) -> list[MaskProposal]:
    """Parse one image's mask file back into proposals."""
    proposals = []
    for n, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise DataError(f"{path}:{n}: expected 4 fields, got {len(fields)}")
        config_id, iteration, patch_rle, pixel_rle = fields
        try:
            proposals.append(
                MaskProposal(
                    image_id=image_id,
                    patch_mask=rle_decode(patch_rle),
                    iteration_index=int(iteration),
                    config_id=config_id,
                    pixel_mask=None if pixel_rle == "-" else rle_decode(pixel_rle),
                )
            )
        except ValueError as exc:
            raise DataError(f"{path}:{n}: {exc}") from exc
    return proposals


def _iter_feature_maps(cfg: PipelineConfig, manifest: Manifest) -> Iterator[tuple]:
    for entry in manifest.entries:
        if entry.features is None:
            raise DataError(f"{entry.image_id}: manifest row has no feature tensor")
        yield entry, load_feature_map(entry.features, entry.image_id)


def cmd_discover(cfg: PipelineConfig) -> str:
    """Run region discovery for every preset over every manifest image."""
    manifest = require_dataset(cfg)
    presets = load_discovery_presets(cfg)
    cfg.masks_dir.mkdir(parents=True, exist_ok=True)
    total = 0
    for entry, fmap in _iter_feature_maps(cfg, manifest):
        pixel_hw = (
            fmap.grid_h * cfg.pixels_per_patch,
            fmap.grid_w * cfg.pixels_per_patch,
        )
        proposals: list[MaskProposal] = []
        for preset in presets:
            proposals.extend(discover(fmap, preset, pixel_hw))
        proposals.sort(key=lambda p: (p.config_id, p.iteration_index))
        _write_masks(_mask_file(cfg, entry.image_id), proposals)
        total += len(proposals)
    return f"discovered {total} regions over {len(manifest.entries)} images"


def _dense_patch_logits(entry, classes: int, grid_hw: tuple[int, int]) -> np.ndarray | None:
    """Densify an image's sparse logit map and project it to the patch grid."""
    if entry.logits is None or not Path(entry.logits).exists():
        return None
    lm = read_logit_map(entry.logits, entry.image_id, classes)
    dense = densify_logits(lm)
    if (lm.cell_h, lm.cell_w) != grid_hw:
        dense = bilinear_resize(dense, grid_hw[0], grid_hw[1])
    return dense


def cmd_filter(cfg: PipelineConfig) -> str:
    """Score proposals against the dense logit maps and keep the confident ones."""
    manifest = require_dataset(cfg)
    classes = len(load_class_names(cfg))
    if not cfg.masks_dir.exists():
        raise DataError(f"no masks at {cfg.masks_dir}; run discover first")
    proposals: list[MaskProposal] = []
    dense_logits: dict[str, np.ndarray] = {}
    labels: dict[str, int] = {}
    for entry, fmap in _iter_feature_maps(cfg, manifest):
        mask_path = _mask_file(cfg, entry.image_id)
        if not mask_path.exists():
            raise DataError(f"missing mask file {mask_path}")
        proposals.extend(read_masks(mask_path, entry.image_id))
        dense = _dense_patch_logits(entry, classes, (fmap.grid_h, fmap.grid_w))
        if dense is not None:
            dense_logits[entry.image_id] = dense
        if entry.label is not None:
            labels[entry.image_id] = entry.label
    outcome = filter_proposals(proposals, dense_logits, labels, cfg.train.tau_sel)
    lines = []
    for p in outcome.kept:
        lines.append(
            f"{p.image_id}\t{p.config_id}\t{p.iteration_index}\t{rle_encode(p.patch_mask)}"
        )
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    cfg.selected_path.write_text("\n".join(lines) + "\n" if lines else "")
    skipped = f", skipped {len(outcome.skipped_images)} images" if outcome.skipped_images else ""
    return (
        f"kept {len(outcome.kept)} of {len(proposals)} proposals "
        f"at tau_sel={cfg.train.tau_sel}{skipped}"
    )


def read_selected(cfg: PipelineConfig) -> list[tuple[str, str, int, np.ndarray]]:
    """Rows of the retained-proposal manifest: id, preset, iteration, mask."""
    if not cfg.selected_path.exists():
        raise DataError(f"no retained proposals at {cfg.selected_path}; run filter first")
    rows = []
    for n, line in enumerate(cfg.selected_path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise DataError(f"{cfg.selected_path}:{n}: expected 4 fields")
        rows.append((fields[0], fields[1], int(fields[2]), rle_decode(fields[3])))
    return rows


def _head_digest(cfg: PipelineConfig, dim: int, classes: int) -> str:
    payload = dataclasses.asdict(cfg.train)
    payload.update(hidden=cfg.hidden, activation=cfg.activation, dim=dim, classes=classes)
    return config_digest(payload)


def cmd_train(cfg: PipelineConfig) -> str:
    """Train the region head on retained proposals pooled with patch dropout."""
    manifest = require_dataset(cfg)
    names = load_class_names(cfg)
    rows = read_selected(cfg)
    if not rows:
        raise DataError("the retained-proposal manifest is empty")
    fmaps = {e.image_id: f for e, f in _iter_feature_maps(cfg, manifest)}
    features = []
    targets = []
    for i, (image_id, _config, _iteration, patch_mask) in enumerate(rows):
        entry = manifest.by_id.get(image_id)
        if entry is None or entry.label is None:
            raise DataError(f"{image_id}: selected proposal without a labeled image")
        rng = np.random.default_rng([cfg.seed, i])
        features.append(
            masked_pool(
                fmaps[image_id], patch_mask,
                dropout_frac=cfg.train.patch_dropout, rng=rng,
            )
        )
        targets.append(entry.label)
    z = np.stack(features)
    y = np.asarray(targets, dtype=np.int64)
    head = LabelerHead.create(
        dim=z.shape[1], classes=len(names), hidden=cfg.hidden,
        activation=cfg.activation, seed=cfg.seed,
    )
    head, curve = train(head, z, y, cfg.train)
    cfg.checkpoint_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(head, cfg.checkpoint_dir, _head_digest(cfg, z.shape[1], len(names)))
    curve_lines = [f"{e}\t{loss:.10g}" for e, loss in enumerate(curve)]
    (cfg.out_dir / "loss_curve.txt").write_text("\n".join(curve_lines) + "\n")
    acc = train_accuracy(head, z, y)
    return f"trained on {len(rows)} regions, final loss {curve[-1]:.4g}, train acc {acc:.3f}"


def _scored_masks(head: LabelerHead, fmap: PatchFeatureMap, proposals) -> list[ScoredMask]:
    scored = []
    for p in proposals:
        pred = predict_region(head, fmap, p.patch_mask)
        mask = p.pixel_mask if p.pixel_mask is not None else p.patch_mask
        scored.append(
            ScoredMask(
                probs=pred.probs,
                iteration_index=p.iteration_index,
                mask_rle=rle_encode(mask),
            )
        )
    return scored


def cmd_relabel(cfg: PipelineConfig) -> str:
    """Predict over discovered regions and aggregate per-image label sets."""
    manifest = require_dataset(cfg)
    names = load_class_names(cfg)
    head = load_checkpoint(cfg.checkpoint_dir)
    if head.classes != len(names):
        raise DataError(
            f"checkpoint predicts {head.classes} classes, dataset lists {len(names)}"
        )
    policy = cfg.policy
    records = []
    for entry, fmap in _iter_feature_maps(cfg, manifest):
        mask_path = _mask_file(cfg, entry.image_id)
        proposals = read_masks(mask_path, entry.image_id) if mask_path.exists() else []
        scored = _scored_masks(head, fmap, proposals)
        local = build_local(entry.image_id, scored, policy, classes=len(names))
        global_probs = None
        if policy.global_mode == "pred":
            whole = np.ones((fmap.grid_h, fmap.grid_w), dtype=bool)
            global_probs = predict_region(head, fmap, whole).probs
        records.append(
            merge_global(local, policy, original_label=entry.label, global_probs=global_probs)
        )
    write_label_sidecar(cfg.labels_path, records, classes=len(names))
    stats = label_stats(records, cfg.report_threshold)
    table = format_label_stats(stats)
    (cfg.out_dir / "label_stats.txt").write_text(table + "\n")
    return f"labeled {len(records)} images\n{table}"


def _single_label_calibration(records) -> list[CalibRecord]:
    calib = []
    for rec in records:
        present = np.flatnonzero(rec.soft >= 0.5)
        if present.size == 1:
            calib.append(
                CalibRecord(
                    image_id=rec.image_id,
                    labels=frozenset({int(present[0])}),
                    probs=rec.soft,
                )
            )
    return calib


def cmd_resolve(cfg: PipelineConfig) -> str:
    """Upgrade confusable pairs: solve counts, derive gates, apply them."""
    if not cfg.labels_path.exists():
        raise DataError(f"no labels at {cfg.labels_path}; run relabel first")
    records, classes = read_label_sidecar(cfg.labels_path)
    names = load_class_names(cfg)
    if classes != len(names):
        raise DataError("label sidecar and class list disagree on class count")
    if cfg.pairs is not None:
        table = read_cooccurrence_tsv(cfg.pairs, names)
    else:
        table = mine_pairs(records, classes, threshold=cfg.report_threshold)
    calib = _single_label_calibration(records)
    thresholds = []
    for pair in table.pairs:
        counts = solve_upgrade_counts(
            pair.n_a, pair.n_b, pair.n_ab,
            target_b_given_a=cfg.target_conf, target_a_given_b=cfg.target_conf,
        )
        thresholds.append(
            derive_thresholds(calib, pair.class_a, pair.class_b, counts.m_a, counts.m_b)
        )
    write_thresholds(cfg.out_dir / "pair_thresholds.tsv", thresholds)
    adjusted = []
    changed = 0
    for rec in records:
        soft = apply_pairing(rec.soft, int(np.argmax(rec.soft)), thresholds)
        if not np.array_equal(soft, rec.soft):
            changed += 1
        hard = None if rec.hard is None else soft > cfg.tau
        adjusted.append(
            dataclasses.replace(
                rec, soft=soft, hard=hard, strategy_tag=rec.strategy_tag + "+Pairs"
            )
        )
    write_label_sidecar(cfg.resolved_path, adjusted, classes=classes)
    return f"resolved {len(table.pairs)} pairs, adjusted {changed} of {len(records)} images"


def _read_gt_sets(cfg: PipelineConfig) -> dict[str, frozenset[int]]:
    path = cfg.data_dir / "gt_labels.txt"
    if not path.exists():
        return {}
    out = {}
    for n, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            image_id, classes = line.split("\t")
            out[image_id] = frozenset(int(c) for c in classes.split(","))
        except ValueError as exc:
            raise DataError(f"{path}:{n}: bad ground-truth line") from exc
    return out


def cmd_eval(cfg: PipelineConfig) -> str:
    """Score the label sets against ground truth and report metrics."""
    manifest = require_dataset(cfg)
    labels_path = cfg.resolved_path if cfg.resolved_path.exists() else cfg.labels_path
    if not labels_path.exists():
        raise DataError(f"no labels at {cfg.labels_path}; run relabel first")
    records, classes = read_label_sidecar(labels_path)
    gt_sets = _read_gt_sets(cfg)
    by_id = {r.image_id: r for r in records}
    eval_records = []
    single_records = []
    pooled = []
    for entry, fmap in _iter_feature_maps(cfg, manifest):
        rec = by_id.get(entry.image_id)
        if rec is None:
            raise DataError(f"{entry.image_id}: image has no label record")
        gt = gt_sets.get(entry.image_id)
        if gt is None:
            if entry.label is None:
                raise DataError(f"{entry.image_id}: no ground truth available")
            gt = frozenset({entry.label})
        whole = np.ones((fmap.grid_h, fmap.grid_w), dtype=bool)
        feature = masked_pool(fmap, whole)
        pooled.append(feature)
        eval_records.append(EvalRecord(entry.image_id, rec.soft, gt, feature))
        if entry.label is not None:
            single_records.append(
                EvalRecord(entry.image_id, rec.soft, frozenset({entry.label}))
            )
    table = subgroup_map(eval_records)
    entropy = knn_entropy(np.stack(pooled)) if len(pooled) > 3 else float("nan")
    lines = [
        f"{'images':<22}{len(eval_records):>10}",
        f"{'top1 multi':<22}{top1_accuracy(eval_records, 'multi'):>10.4f}",
    ]
    if single_records:
        acc = top1_accuracy(single_records, "single")
        lines.append(f"{'top1 single':<22}{acc:>10.4f}")
    lines.append(f"{'mAP':<22}{mean_ap(eval_records):>10.4f}")
    lines.append(f"{'feature entropy':<22}{entropy:>10.4f}")
    report = "\n".join(lines) + "\n\n" + format_subgroup_table(table)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "eval_report.txt").write_text(report + "\n")
    return report


def _read_gt_masks(cfg: PipelineConfig) -> dict[str, list[np.ndarray]]:
    path = cfg.data_dir / "gt_masks.txt"
    if not path.exists():
        raise DataError(f"missing ground-truth masks at {path}")
    out: dict[str, list[np.ndarray]] = {}
    for n, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise DataError(f"{path}:{n}: expected 3 fields")
        out.setdefault(fields[0], []).append(rle_decode(fields[2]))
    return out


def cmd_sweep(cfg: PipelineConfig) -> str:
    """Recall of every discovery preset against the ground-truth masks."""
    manifest = require_dataset(cfg)
    presets = load_discovery_presets(cfg)
    gt_masks = _read_gt_masks(cfg)
    images = []
    pixel_hw = None
    for entry, fmap in _iter_feature_maps(cfg, manifest):
        masks = gt_masks.get(entry.image_id, [])
        pixel_hw = (
            fmap.grid_h * cfg.pixels_per_patch,
            fmap.grid_w * cfg.pixels_per_patch,
        )
        images.append((fmap, masks))
    if pixel_hw is None:
        raise DataError("manifest lists no images")
    rows = sweep_recall(presets, images, pixel_hw, cfg.iou_threshold)
    lines = [f"{'preset':<16}{'recall':>8}{'matched':>9}{'total':>7}"]
    for row in rows:
        lines.append(f"{row.preset_id:<16}{row.recall:>8.3f}{row.matched:>9}{row.total:>7}")
    report = "\n".join(lines)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "sweep.txt").write_text(report + "\n")
    return report
