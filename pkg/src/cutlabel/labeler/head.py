"""Two-layer classification head over pooled region features."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cutlabel.errors import DataError
from cutlabel.tensorstore import read_tensor, write_tensor

_ACTIVATIONS = ("relu", "identity")


def softmax(v: np.ndarray, axis: int = -1) -> np.ndarray:
    """Shift-stabilized softmax, floored so outputs stay strictly positive."""
    shifted = v - np.max(v, axis=axis, keepdims=True)
    e = np.maximum(np.exp(shifted), np.finfo(np.float64).tiny)
    return e / e.sum(axis=axis, keepdims=True)


@dataclass
class LabelerHead:
    """MLP dim -> hidden -> K with rectifier activation by default.

    Parameters live in float64 for training; checkpoints round to float32.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    activation: str = "relu"
    rng_seed: int = 0

    def __post_init__(self) -> None:
        self.w1 = np.asarray(self.w1, dtype=np.float64)
        self.b1 = np.asarray(self.b1, dtype=np.float64)
        self.w2 = np.asarray(self.w2, dtype=np.float64)
        self.b2 = np.asarray(self.b2, dtype=np.float64)
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        dim, hidden = self.w1.shape
        if self.b1.shape != (hidden,) or self.w2.shape[0] != hidden:
            raise ValueError("layer shapes disagree")
        if self.b2.shape != (self.w2.shape[1],):
            raise ValueError("output bias shape disagrees")
        for arr in (self.w1, self.b1, self.w2, self.b2):
            if not np.isfinite(arr).all():
                raise ValueError("non-finite parameters")

    @property
    def dim(self) -> int:
        return self.w1.shape[0]

    @property
    def hidden(self) -> int:
        return self.w1.shape[1]

    @property
    def classes(self) -> int:
        return self.w2.shape[1]

    @classmethod
    def create(
        cls,
        dim: int,
        classes: int,
        hidden: int = 1024,
        activation: str = "relu",
        seed: int = 0,
    ) -> "LabelerHead":
        """Seeded uniform fan-in initialization, zero biases."""
        rng = np.random.default_rng(seed)
        lim1 = 1.0 / np.sqrt(dim)
        lim2 = 1.0 / np.sqrt(hidden)
        return cls(
            w1=rng.uniform(-lim1, lim1, size=(dim, hidden)),
            b1=np.zeros(hidden),
            w2=rng.uniform(-lim2, lim2, size=(hidden, classes)),
            b2=np.zeros(classes),
            activation=activation,
            rng_seed=seed,
        )

    def forward(self, z: np.ndarray) -> np.ndarray:
        """Logits for one pooled vector (dim,) or a batch (n, dim)."""
        z = np.asarray(z, dtype=np.float64)
        pre = z @ self.w1 + self.b1
        act = np.maximum(pre, 0.0) if self.activation == "relu" else pre
        return act @ self.w2 + self.b2

    def parameters(self) -> dict[str, np.ndarray]:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}


def loss_and_grad(
    head: LabelerHead, z: np.ndarray, y: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy over the batch and its analytic gradients.

    Regularization is not included here; the optimizer adds weight decay
    to the weight gradients separately.
    """
    z = np.asarray(z, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if z.ndim != 2 or y.shape != (z.shape[0],):
        raise ValueError("expected z of shape (n, dim) and y of shape (n,)")
    n = z.shape[0]
    if not ((0 <= y) & (y < head.classes)).all():
        raise ValueError("label outside [0, K)")
    pre = z @ head.w1 + head.b1
    act = np.maximum(pre, 0.0) if head.activation == "relu" else pre
    logits = act @ head.w2 + head.b2
    probs = softmax(logits, axis=1)
    loss = float(-np.mean(np.log(probs[np.arange(n), y])))
    dlogits = probs.copy()
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    gw2 = act.T @ dlogits
    gb2 = dlogits.sum(axis=0)
    dact = dlogits @ head.w2.T
    dpre = dact * (pre > 0) if head.activation == "relu" else dact
    gw1 = z.T @ dpre
    gb1 = dpre.sum(axis=0)
    return loss, {"w1": gw1, "b1": gb1, "w2": gw2, "b2": gb2}


def config_digest(payload: dict) -> str:
    """Stable short hash of a JSON-serializable configuration."""
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def save_checkpoint(head: LabelerHead, out_dir: str | Path, cfg_hash: str = "") -> None:
    """Write parameter tensors plus a metadata record into a directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, arr in head.parameters().items():
        write_tensor(out / f"{name}.tf", arr.astype(np.float32))
    meta = {
        "dim": head.dim,
        "hidden": head.hidden,
        "classes": head.classes,
        "activation": head.activation,
        "seed": head.rng_seed,
        "cfg_hash": cfg_hash,
    }
    (out / "meta.json").write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n")


def load_checkpoint(in_dir: str | Path) -> LabelerHead:
    src = Path(in_dir)
    meta_path = src / "meta.json"
    if not meta_path.exists():
        raise DataError(f"{src}: missing meta.json")
    try:
        meta = json.loads(meta_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{meta_path}: invalid metadata: {exc}") from exc
    arrays = {}
    for name in ("w1", "b1", "w2", "b2"):
        arrays[name] = read_tensor(src / f"{name}.tf").astype(np.float64)
    head = LabelerHead(
        **arrays,
        activation=meta.get("activation", "relu"),
        rng_seed=int(meta.get("seed", 0)),
    )
    expect = (meta.get("dim"), meta.get("hidden"), meta.get("classes"))
    if expect != (head.dim, head.hidden, head.classes):
        raise DataError(f"{src}: metadata shape {expect} disagrees with tensors")
    return head
