"""Training loop determinism, schedule shape, and optimization sanity."""

from __future__ import annotations

import numpy as np
import pytest

from cutlabel.labeler import LabelerHead, TrainConfig, lr_at, train, train_accuracy


def _clusters(rng, n_per_class, classes, dim, spread=0.05):
    centers = rng.standard_normal((classes, dim)) * 2
    z = np.concatenate(
        [centers[c] + spread * rng.standard_normal((n_per_class, dim)) for c in range(classes)]
    )
    y = np.repeat(np.arange(classes), n_per_class)
    return z, y


def test_schedule_warmup_then_cosine():
    cfg = TrainConfig(epochs=20, lr=0.1, warmup_epochs=5)
    assert lr_at(cfg, 0) == pytest.approx(0.02)
    assert lr_at(cfg, 4) == pytest.approx(0.1)
    assert lr_at(cfg, 5) == pytest.approx(0.1)
    mid = lr_at(cfg, 5 + 7)
    assert 0 < mid < 0.1
    assert lr_at(cfg, 19) < 0.006
    rates = [lr_at(cfg, e) for e in range(5, 20)]
    assert all(a >= b for a, b in zip(rates, rates[1:]))


def test_zero_lr_leaves_parameters_unchanged():
    rng = np.random.default_rng(0)
    z, y = _clusters(rng, 8, 3, 10)
    head = LabelerHead.create(10, 3, hidden=16, seed=1)
    before = {k: v.copy() for k, v in head.parameters().items()}
    _, curve = train(head, z, y, TrainConfig(epochs=4, lr=0.0, batch_size=8, seed=0))
    for name, arr in head.parameters().items():
        assert np.array_equal(arr, before[name])
    assert max(curve) - min(curve) < 1e-12


def test_identical_seeds_identical_parameters():
    rng = np.random.default_rng(2)
    z, y = _clusters(rng, 10, 4, 12)
    cfg = TrainConfig(epochs=12, lr=0.1, batch_size=16, seed=5)
    out = []
    for _ in range(2):
        head = LabelerHead.create(12, 4, hidden=20, seed=7)
        train(head, z, y, cfg)
        out.append({k: v.copy() for k, v in head.parameters().items()})
    for name in out[0]:
        assert np.array_equal(out[0][name], out[1][name])


def test_shuffle_seed_changes_minibatch_trajectory():
    rng = np.random.default_rng(3)
    z, y = _clusters(rng, 10, 3, 8)
    heads = []
    for seed in (0, 1):
        head = LabelerHead.create(8, 3, hidden=10, seed=4)
        train(head, z, y, TrainConfig(epochs=6, lr=0.1, batch_size=4, seed=seed))
        heads.append(head)
    assert not np.array_equal(heads[0].w1, heads[1].w1)


def test_separable_clusters_reach_high_accuracy():
    rng = np.random.default_rng(4)
    z, y = _clusters(rng, 30, 3, 16, spread=0.02)
    head = LabelerHead.create(16, 3, hidden=32, seed=0)
    train(head, z, y, TrainConfig(epochs=40, lr=0.1, batch_size=32, seed=0))
    assert train_accuracy(head, z, y) >= 0.99


def test_full_batch_identity_loss_nonincreasing():
    rng = np.random.default_rng(5)
    z, y = _clusters(rng, 12, 3, 6, spread=0.3)
    head = LabelerHead.create(6, 3, hidden=6, activation="identity", seed=2)
    cfg = TrainConfig(
        epochs=60, lr=0.02, momentum=0.0, weight_decay=0.0,
        warmup_epochs=1, batch_size=len(z), seed=0,
    )
    _, curve = train(head, z, y, cfg)
    diffs = np.diff(curve)
    assert (diffs <= 1e-12).all()


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nonfinite_loss_aborts_with_location():
    z = np.array([[np.inf, 0.0], [0.0, 1.0]])
    y = np.array([0, 1])
    head = LabelerHead.create(2, 2, hidden=4, seed=0)
    with pytest.raises(FloatingPointError, match="epoch 0, batch 0"):
        train(head, z, y, TrainConfig(epochs=1, batch_size=2, seed=0))


def test_empty_dataset_rejected():
    head = LabelerHead.create(3, 2, hidden=4, seed=0)
    with pytest.raises(ValueError, match="empty"):
        train(head, np.zeros((0, 3)), np.zeros(0, dtype=int), TrainConfig(epochs=1))


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(patch_dropout=1.0)
    with pytest.raises(ValueError):
        TrainConfig(tau_sel=0.0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
