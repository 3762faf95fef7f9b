"""Deterministic SGD training loop for the classification head."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cutlabel.labeler.head import LabelerHead, loss_and_grad

_WEIGHT_TENSORS = ("w1", "w2")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 1e-4
    warmup_epochs: int = 5
    batch_size: int = 512
    patch_dropout: float = 0.25
    tau_sel: float = 0.75
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if not 0.0 <= self.patch_dropout < 1.0:
            raise ValueError("patch_dropout must be in [0, 1)")
        if not 0.0 < self.tau_sel < 1.0:
            raise ValueError("tau_sel must be in (0, 1)")
        if self.warmup_epochs < 0 or self.lr < 0:
            raise ValueError("warmup_epochs and lr must be nonnegative")


def lr_at(cfg: TrainConfig, epoch: int) -> float:
    """Linear warmup to cfg.lr, then cosine decay to zero."""
    if epoch < cfg.warmup_epochs:
        return cfg.lr * (epoch + 1) / cfg.warmup_epochs
    span = cfg.epochs - cfg.warmup_epochs
    if span <= 0:
        return cfg.lr
    t = (epoch - cfg.warmup_epochs) / span
    return 0.5 * cfg.lr * (1.0 + np.cos(np.pi * t))


def train(
    head: LabelerHead, z: np.ndarray, y: np.ndarray, cfg: TrainConfig
) -> tuple[LabelerHead, list[float]]:
    """Train in place with Nesterov momentum; returns the head and loss curve.

    Batch composition is a pure function of (seed, epoch), so identically
    seeded runs produce identical parameters. Weight decay touches the two
    weight matrices only.
    """
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(z) == 0:
        raise ValueError("empty training set")
    n = len(z)
    params = head.parameters()
    velocity = {name: np.zeros_like(arr) for name, arr in params.items()}
    curve: list[float] = []
    for epoch in range(cfg.epochs):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(n)
        lr = lr_at(cfg, epoch)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            loss, grads = loss_and_grad(head, z[batch], y[batch])
            if not np.isfinite(loss):
                raise FloatingPointError(
                    f"non-finite loss at epoch {epoch}, batch {start // cfg.batch_size}"
                )
            total += loss * len(batch)
            for name, param in params.items():
                g = grads[name]
                if cfg.weight_decay and name in _WEIGHT_TENSORS:
                    g = g + cfg.weight_decay * param
                buf = velocity[name]
                buf *= cfg.momentum
                buf += g
                param -= lr * (g + cfg.momentum * buf)
        curve.append(total / n)
    return head, curve


def train_accuracy(head: LabelerHead, z: np.ndarray, y: np.ndarray) -> float:
    logits = head.forward(np.asarray(z, dtype=np.float64))
    return float(np.mean(np.argmax(logits, axis=1) == np.asarray(y)))
