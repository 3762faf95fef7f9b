"""Region classification: pooling, the 2-layer head, training, inference."""

from cutlabel.labeler.head import (
    LabelerHead,
    config_digest,
    load_checkpoint,
    loss_and_grad,
    save_checkpoint,
    softmax,
)
from cutlabel.labeler.pooling import box_pool, masked_pool, pooled_logit_score
from cutlabel.labeler.train import TrainConfig, lr_at, train, train_accuracy
from cutlabel.labeler.infer import (
    ExternalFilterOutcome,
    FilterOutcome,
    RegionPrediction,
    export_label_map,
    filter_external_masks,
    filter_proposals,
    predict_box,
    predict_region,
)

__all__ = [
    "ExternalFilterOutcome",
    "FilterOutcome",
    "LabelerHead",
    "RegionPrediction",
    "TrainConfig",
    "box_pool",
    "config_digest",
    "export_label_map",
    "filter_external_masks",
    "filter_proposals",
    "load_checkpoint",
    "loss_and_grad",
    "lr_at",
    "masked_pool",
    "pooled_logit_score",
    "predict_box",
    "predict_region",
    "save_checkpoint",
    "softmax",
    "train",
    "train_accuracy",
]
