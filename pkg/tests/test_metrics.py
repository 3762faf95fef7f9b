"""Tests for accuracy, average precision, subgrouping, and entropy."""

import numpy as np
import pytest
from scipy.special import digamma, gammaln

from cutlabel.metrics import (
    DIST_FLOOR,
    EvalRecord,
    format_subgroup_table,
    knn_entropy,
    mean_ap,
    per_class_ap,
    subgroup_map,
    top1_accuracy,
)
from oracles import average_precision_loops, kth_neighbor_dists_loops


def rec(image_id, probs, gt):
    return EvalRecord(image_id, np.asarray(probs, dtype=np.float64), frozenset(gt))


class TestEvalRecord:
    def test_empty_ground_truth_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            rec("a", [0.5, 0.5], [])

    def test_out_of_range_class_rejected(self):
        with pytest.raises(ValueError, match="out of range"):
            rec("a", [0.5, 0.5], [2])

    def test_matrix_scores_rejected(self):
        with pytest.raises(ValueError, match="1-D"):
            rec("a", [[0.5], [0.5]], [0])


class TestTop1Accuracy:
    def test_any_label_counts_under_multi(self):
        r = rec("a", [0.2, 0.6, 0.2], [0, 1])
        assert top1_accuracy([r], "multi") == 1.0

    def test_wrong_top1_fails_both_criteria(self):
        r = rec("a", [0.2, 0.6, 0.2], [0])
        assert top1_accuracy([r], "multi") == 0.0
        assert top1_accuracy([r], "single") == 0.0

    def test_three_of_four(self):
        records = [
            rec("a", [0.9, 0.1], [0]),
            rec("b", [0.1, 0.9], [1]),
            rec("c", [0.8, 0.2], [0]),
            rec("d", [0.3, 0.7], [0]),
        ]
        assert top1_accuracy(records, "single") == 0.75

    def test_argmax_tie_takes_lowest_index(self):
        assert top1_accuracy([rec("a", [0.5, 0.5], [0])], "single") == 1.0
        assert top1_accuracy([rec("a", [0.5, 0.5], [1])], "single") == 0.0

    def test_invariant_under_positive_rescaling(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            records = [
                rec(f"i{i}", rng.uniform(size=4), [int(rng.integers(4))])
                for i in range(10)
            ]
            scaled = [EvalRecord(r.image_id, r.probs * 7.5, r.gt) for r in records]
            assert top1_accuracy(records, "single") == top1_accuracy(scaled, "single")

    def test_single_criterion_rejects_multi_label_records(self):
        with pytest.raises(ValueError, match="exactly one"):
            top1_accuracy([rec("a", [0.5, 0.5], [0, 1])], "single")

    def test_empty_and_bad_criterion_rejected(self):
        with pytest.raises(ValueError, match="no records"):
            top1_accuracy([], "multi")
        with pytest.raises(ValueError, match="criterion"):
            top1_accuracy([rec("a", [1.0], [0])], "both")


class TestMeanAp:
    def test_hand_case_two_positives_of_three(self):
        records = [
            rec("a", [0.9, 0.0], [0]),
            rec("b", [0.8, 0.9], [1]),
            rec("c", [0.7, 0.0], [0]),
        ]
        assert per_class_ap(records)[0] == pytest.approx(5.0 / 6.0, abs=1e-12)

    def test_perfect_ranking_scores_one(self):
        records = [
            rec("a", [0.9, 0.3], [0]),
            rec("b", [0.8, 0.6], [0]),
            rec("c", [0.1, 0.9], [1]),
        ]
        assert per_class_ap(records)[0] == 1.0
        assert per_class_ap(records)[1] == 1.0

    def test_unweighted_mean_of_class_aps(self):
        records = [
            rec("a", [0.9, 0.8], [0]),
            rec("b", [0.1, 0.7], [1]),
        ]
        aps = per_class_ap(records)
        assert aps[0] == 1.0
        assert aps[1] == 0.5
        assert mean_ap(records) == pytest.approx(0.75)

    def test_zero_positive_classes_excluded(self):
        records = [
            rec("a", [0.9, 0.2, 0.4], [0]),
            rec("b", [0.1, 0.8, 0.3], [1]),
        ]
        assert sorted(per_class_ap(records)) == [0, 1]

    def test_empty_record_list_rejected(self):
        with pytest.raises(ValueError, match="no records"):
            mean_ap([])

    def test_matches_loop_oracle_on_random_records(self):
        rng = np.random.default_rng(0x5EED)
        for _ in range(500):
            classes = int(rng.integers(2, 6))
            n = int(rng.integers(3, 16))
            records = []
            for i in range(n):
                scores = np.round(rng.uniform(size=classes), 1)
                size = int(rng.integers(1, classes + 1))
                gt = rng.choice(classes, size=size, replace=False)
                records.append(rec(f"i{i:02d}", scores, (int(c) for c in gt)))
            expected = {}
            for c in range(classes):
                positives = [c in r.gt for r in records]
                if any(positives):
                    expected[c] = average_precision_loops(
                        [float(r.probs[c]) for r in records],
                        positives,
                        [r.image_id for r in records],
                    )
            got = per_class_ap(records)
            assert got.keys() == expected.keys()
            for c in expected:
                assert got[c] == expected[c]
            assert mean_ap(records) == float(
                np.mean([expected[c] for c in sorted(expected)])
            )

    def test_invariant_under_monotone_score_transform(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            records = [
                rec(f"i{i}", np.round(rng.uniform(size=3), 2), [int(rng.integers(3))])
                for i in range(12)
            ]
            warped = [EvalRecord(r.image_id, np.exp(r.probs), r.gt) for r in records]
            assert mean_ap(records) == mean_ap(warped)

    def test_tie_order_is_by_image_id(self):
        records = [
            rec("a", [0.5, 0.9], [1]),
            rec("b", [0.5, 0.1], [0]),
            rec("c", [0.4, 0.1], [0]),
        ]
        assert per_class_ap(records)[0] == pytest.approx(7.0 / 12.0, abs=1e-12)


class TestSubgroupMap:
    def test_single_label_images_fill_one_bucket(self):
        records = [rec(f"i{i}", [0.9, 0.1], [0]) for i in range(5)]
        table = subgroup_map(records)
        assert list(table) == ["1"]
        assert table["1"].images == 5

    def test_bucket_sizes_partition_records(self):
        rng = np.random.default_rng(4)
        records = []
        for i in range(40):
            size = int(rng.integers(1, 6))
            gt = rng.choice(6, size=size, replace=False)
            records.append(rec(f"i{i}", rng.uniform(size=6), (int(c) for c in gt)))
        table = subgroup_map(records)
        assert sum(b.images for b in table.values()) == 40
        assert all(key in ("1", "2", "3", "4+") for key in table)

    def test_absent_bucket_is_missing_not_zero(self):
        records = [
            rec("a", [0.9, 0.1, 0.0], [0]),
            rec("b", [0.5, 0.6, 0.0], [0, 1]),
        ]
        table = subgroup_map(records)
        assert set(table) == {"1", "2"}

    def test_single_bucket_equals_mean_ap_on_subset(self):
        records = [
            rec("a", [0.9, 0.6], [0, 1]),
            rec("b", [0.4, 0.8], [0, 1]),
            rec("c", [0.7, 0.2], [0, 1]),
        ]
        assert subgroup_map(records)["2"].mean_ap == mean_ap(records)

    def test_hand_computed_buckets(self):
        records = [
            rec("a", [0.9, 0.8], [0]),
            rec("b", [0.1, 0.7], [1]),
            rec("c", [0.9, 0.9], [0, 1]),
            rec("d", [0.8, 0.8], [0, 1]),
        ]
        table = subgroup_map(records)
        assert table["1"].mean_ap == pytest.approx(0.75)
        assert table["2"].mean_ap == 1.0
        assert (table["1"].images, table["2"].images) == (2, 2)

    def test_format_contains_all_buckets(self):
        records = [
            rec("a", [0.9, 0.8], [0]),
            rec("c", [0.9, 0.9], [0, 1]),
        ]
        text = format_subgroup_table(subgroup_map(records))
        assert "k=1" in text and "k=2" in text
        assert "Images" in text and "mAP" in text


class TestKnnEntropy:
    def test_matches_loop_oracle_distances(self):
        rng = np.random.default_rng(17)
        points = rng.normal(size=(80, 3))
        rho = kth_neighbor_dists_loops(points, k=3)
        n, d = points.shape
        expected = (
            (d / n) * np.sum(np.log(np.maximum(rho, DIST_FLOOR)))
            + (d / 2.0) * np.log(np.pi) - gammaln(d / 2.0 + 1.0)
            + digamma(n) - digamma(3)
        )
        assert knn_entropy(points, k=3) == pytest.approx(expected, abs=1e-12)

    def test_collapsed_points_stay_finite(self):
        points = np.ones((10, 2))
        h = knn_entropy(points)
        assert np.isfinite(h)
        expected = 2.0 * np.log(DIST_FLOOR) + np.log(np.pi) - gammaln(2.0) \
            + digamma(10) - digamma(3)
        assert h == pytest.approx(expected, abs=1e-12)

    def test_scaling_shifts_by_d_log_s(self):
        rng = np.random.default_rng(29)
        points = rng.normal(size=(200, 2))
        s = 3.7
        shift = knn_entropy(points * s) - knn_entropy(points)
        assert abs(shift - 2.0 * np.log(s)) < 1e-9

    def test_rotation_invariance(self):
        rng = np.random.default_rng(31)
        points = rng.normal(size=(150, 3))
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        assert abs(knn_entropy(points @ q.T) - knn_entropy(points)) < 1e-9

    def test_gaussian_approaches_closed_form(self):
        rng = np.random.default_rng(0x5EED)
        points = rng.normal(size=(5000, 2))
        closed_form = np.log(2.0 * np.pi * np.e)
        assert abs(knn_entropy(points) - closed_form) / closed_form < 0.05

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError, match="more than k"):
            knn_entropy(np.zeros((3, 2)), k=3)

    def test_non_matrix_rejected(self):
        with pytest.raises(ValueError, match="matrix"):
            knn_entropy(np.zeros(5))
