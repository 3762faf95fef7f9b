"""Thresholded cosine affinity graph construction."""

from __future__ import annotations

import numpy as np
import pytest

from cutlabel.maskcut import WEAK_EDGE, build_affinity
from cutlabel.tensorstore import PatchFeatureMap


def _fmap(features: np.ndarray, gh: int, gw: int) -> PatchFeatureMap:
    return PatchFeatureMap("t", gh, gw, features.shape[1], features.astype(np.float32))


def test_entries_binarized():
    rng = np.random.default_rng(0)
    feats = rng.standard_normal((12, 6))
    graph = build_affinity(_fmap(feats, 3, 4), tau=0.4)
    values = set(np.unique(graph.W).tolist())
    assert values <= {WEAK_EDGE, 1.0}
    assert np.array_equal(graph.W, graph.W.T)


def test_threshold_boundary_is_inclusive():
    # two unit vectors at cosine exactly 0.5 must produce a strong edge
    a = np.array([1.0, 0.0])
    b = np.array([0.5, np.sqrt(3) / 2])
    c = np.array([-1.0, 0.0])
    feats = np.stack([a, b, c, a])
    graph = build_affinity(_fmap(feats, 2, 2), tau=0.5)
    assert graph.W[0, 1] == 1.0
    assert graph.W[0, 2] == WEAK_EDGE
    assert graph.W[0, 3] == 1.0


def test_diagonal_thresholded_like_any_entry():
    rng = np.random.default_rng(1)
    feats = rng.standard_normal((9, 4))
    graph = build_affinity(_fmap(feats, 3, 3), tau=0.7)
    assert np.all(np.diag(graph.W) == 1.0)


def test_zero_norm_feature_acts_as_cosine_zero():
    feats = np.zeros((4, 3))
    feats[0] = [1, 0, 0]
    feats[1] = [1, 0, 0]
    # rows 2 and 3 are all-zero
    graph = build_affinity(_fmap(feats, 2, 2), tau=0.5)
    assert graph.W[0, 1] == 1.0
    assert graph.W[0, 2] == WEAK_EDGE
    assert graph.W[2, 3] == WEAK_EDGE
    assert graph.W[2, 2] == WEAK_EDGE  # self-cosine of a zero vector is 0


def test_excluded_rows_and_columns_zeroed():
    rng = np.random.default_rng(2)
    feats = rng.standard_normal((9, 5))
    graph = build_affinity(_fmap(feats, 3, 3), tau=0.3, excluded=[1, 7])
    assert not graph.W[1, :].any()
    assert not graph.W[:, 1].any()
    assert not graph.W[7, :].any()
    assert graph.degrees[1] == 0.0
    assert graph.degrees[7] == 0.0
    active = graph.active
    assert not active[1] and not active[7] and active[0]


def test_degrees_are_row_sums():
    rng = np.random.default_rng(3)
    feats = rng.standard_normal((16, 8))
    graph = build_affinity(_fmap(feats, 4, 4), tau=0.5)
    assert np.allclose(graph.degrees, graph.W.sum(axis=1))


def test_bad_tau_rejected():
    feats = np.ones((4, 2))
    for tau in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ValueError):
            build_affinity(_fmap(feats, 2, 2), tau=tau)


def test_excluded_out_of_range_rejected():
    feats = np.ones((4, 2))
    with pytest.raises(ValueError):
        build_affinity(_fmap(feats, 2, 2), tau=0.5, excluded=[4])
