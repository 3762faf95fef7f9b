"""Second-eigenpair solver against an independent dense generalized oracle."""

from __future__ import annotations

import numpy as np
import pytest

from cutlabel.maskcut import DiscoveryConfig, build_affinity, second_eigvec
from cutlabel.tensorstore import PatchFeatureMap
from oracles import second_smallest_generalized


def _random_graph(rng, gh, gw, dim=8, tau=0.45):
    feats = rng.standard_normal((gh * gw, dim)).astype(np.float32)
    return build_affinity(PatchFeatureMap("t", gh, gw, dim, feats), tau=tau)


def _two_block_graph(rng, gh=4, gw=6, split=10, dim=16):
    n = gh * gw
    protos = rng.standard_normal((2, dim))
    protos /= np.linalg.norm(protos, axis=1, keepdims=True)
    feats = np.empty((n, dim))
    feats[:split] = protos[0] + 0.05 * rng.standard_normal((split, dim))
    feats[split:] = protos[1] + 0.05 * rng.standard_normal((n - split, dim))
    return build_affinity(PatchFeatureMap("t", gh, gw, dim, feats.astype(np.float32)), tau=0.6)


@pytest.mark.parametrize("solver", ["dense", "lanczos"])
def test_matches_generalized_oracle_on_block_graphs(solver):
    cfg = DiscoveryConfig(preset_id="x", eigensolver=solver)
    rng = np.random.default_rng(42)
    for trial in range(100):
        split = int(rng.integers(4, 20))
        graph = _two_block_graph(rng, split=split)
        cut = second_eigvec(graph, cfg)
        lam_o, x_o = second_smallest_generalized(graph.W)
        assert abs(cut.eigenvalue - lam_o) <= 1e-8, f"trial {trial}"
        assert abs(float(np.dot(cut.x, x_o))) >= 0.999, f"trial {trial}"


def test_eigen_residual_of_generalized_problem():
    cfg = DiscoveryConfig(preset_id="x", eigensolver="lanczos")
    rng = np.random.default_rng(3)
    for _ in range(20):
        graph = _random_graph(rng, 5, 7)
        cut = second_eigvec(graph, cfg)
        D = graph.degrees
        lhs = (D * cut.x) - graph.W @ cut.x
        rhs = cut.eigenvalue * (D * cut.x)
        assert np.linalg.norm(lhs - rhs) <= 1e-8 * max(np.linalg.norm(D * cut.x), 1e-30)


def test_sign_convention_largest_entry_positive():
    cfg = DiscoveryConfig(preset_id="x")
    rng = np.random.default_rng(9)
    for _ in range(25):
        graph = _random_graph(rng, 4, 5)
        cut = second_eigvec(graph, cfg)
        peak = int(np.argmax(np.abs(cut.x)))
        assert cut.x[peak] > 0
        assert np.linalg.norm(cut.x) == pytest.approx(1.0, abs=1e-12)


def test_restricted_to_active_nodes():
    cfg = DiscoveryConfig(preset_id="x")
    rng = np.random.default_rng(4)
    feats = rng.standard_normal((20, 8)).astype(np.float32)
    fmap = PatchFeatureMap("t", 4, 5, 8, feats)
    excluded = [0, 3, 11]
    graph = build_affinity(fmap, tau=0.4, excluded=excluded)
    cut = second_eigvec(graph, cfg)
    assert all(cut.x[i] == 0.0 for i in excluded)
    # solution must match the oracle on the submatrix
    keep = np.setdiff1d(np.arange(20), excluded)
    lam_o, x_o = second_smallest_generalized(graph.W[np.ix_(keep, keep)])
    assert abs(cut.eigenvalue - lam_o) <= 1e-8
    assert abs(float(np.dot(cut.x[keep], x_o))) >= 0.999


def test_fewer_than_two_usable_nodes_gives_none():
    cfg = DiscoveryConfig(preset_id="x")
    feats = np.ones((4, 3), dtype=np.float32)
    fmap = PatchFeatureMap("t", 2, 2, 3, feats)
    graph = build_affinity(fmap, tau=0.5, excluded=[0, 1, 2])
    assert second_eigvec(graph, cfg) is None
    graph_all = build_affinity(fmap, tau=0.5, excluded=[0, 1, 2, 3])
    assert second_eigvec(graph_all, cfg) is None


def test_deterministic_across_calls():
    cfg = DiscoveryConfig(preset_id="x", eigensolver="lanczos")
    rng = np.random.default_rng(11)
    graph = _random_graph(rng, 6, 6)
    a = second_eigvec(graph, cfg)
    b = second_eigvec(graph, cfg)
    assert a.eigenvalue == b.eigenvalue
    assert np.array_equal(a.x, b.x)


def test_uniform_complete_graph_has_unit_eigenvalue():
    # all-ones affinity: (D - W) x = lam D x has eigenvalues {0, 1}, so the
    # second-smallest is exactly 1, the no-salient-cut ceiling.
    cfg = DiscoveryConfig(preset_id="x")
    feats = np.tile(np.ones(5, dtype=np.float32), (16, 1))
    graph = build_affinity(PatchFeatureMap("t", 4, 4, 5, feats), tau=0.5)
    cut = second_eigvec(graph, cfg)
    assert cut.eigenvalue == pytest.approx(1.0, abs=1e-10)
