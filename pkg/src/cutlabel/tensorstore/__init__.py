"""Dataset plumbing: array files, masks, label records, and resampling."""

from cutlabel.tensorstore.tensorfile import read_tensor, write_tensor
from cutlabel.tensorstore.rle import rle_decode, rle_encode
from cutlabel.tensorstore.resample import (
    bilinear_resize,
    densify_logits,
    project_mask,
    sparsify_topk,
)
from cutlabel.tensorstore.types import (
    Grounding,
    ImageLabelSet,
    LogitMap,
    MaskProposal,
    PatchFeatureMap,
)
from cutlabel.tensorstore.sidecar import (
    Manifest,
    ManifestEntry,
    read_label_sidecar,
    read_manifest,
    write_label_sidecar,
    write_manifest,
)

__all__ = [
    "Grounding",
    "ImageLabelSet",
    "LogitMap",
    "Manifest",
    "ManifestEntry",
    "MaskProposal",
    "PatchFeatureMap",
    "bilinear_resize",
    "densify_logits",
    "project_mask",
    "read_label_sidecar",
    "read_manifest",
    "read_tensor",
    "rle_decode",
    "rle_encode",
    "sparsify_topk",
    "write_label_sidecar",
    "write_manifest",
    "write_tensor",
]
