import numpy as np
import pytest

from imet.errors import SamplingError
from imet.sampling import (EQUAL_PART, INITIAL, WEIGHTED_PART, MisclassificationReport,
                           allocate_quotas, build_eval_subset, equal_sample,
                           evaluate_misclassifications, imet_sample,
                           misclassification_weights, partition_by_class,
                           weighted_sample)


def make_index(class_sizes, seed=0):
    """ClassIndex over a shuffled label vector with the given class sizes."""
    labels = np.concatenate([np.full(s, k) for k, s in enumerate(class_sizes)])
    labels = np.random.default_rng(seed).permutation(labels)
    return partition_by_class(labels, len(class_sizes)), labels


def report_from_pools(index, pools):
    counts = np.array([len(p) for p in pools], dtype=np.int64)
    return MisclassificationReport(
        per_class_misclassified=[np.asarray(p, dtype=np.int64) for p in pools],
        counts=counts, weights_percent=misclassification_weights(counts))


class TestPartition:
    def test_direct_partition(self):
        index = partition_by_class(np.array([0, 1, 0, 1]), 2)
        np.testing.assert_array_equal(index.per_class[0], [0, 2])
        np.testing.assert_array_equal(index.per_class[1], [1, 3])

    def test_empty_class_rejected(self):
        with pytest.raises(SamplingError):
            partition_by_class(np.array([0, 0, 0]), 2)

    def test_partition_is_disjoint_cover(self):
        rng = np.random.default_rng(1)
        labels = rng.integers(0, 4, size=200)
        index = partition_by_class(labels, 4)
        merged = np.concatenate(index.per_class)
        assert merged.size == 200
        np.testing.assert_array_equal(np.sort(merged), np.arange(200))
        for k in range(4):
            assert np.all(labels[index.per_class[k]] == k)


class TestEqualSample:
    def test_exhaustive_draw(self):
        index, _ = make_index([10, 10])
        batch = equal_sample(index, 10, np.random.default_rng(0))
        assert batch.size == 20
        np.testing.assert_array_equal(np.sort(batch.indices), np.arange(20))

    def test_counts_per_class(self):
        index, labels = make_index([10, 10])
        batch = equal_sample(index, 3, np.random.default_rng(0))
        assert batch.size == 6
        drawn = labels[batch.indices]
        assert (drawn == 0).sum() == 3 and (drawn == 1).sum() == 3

    def test_no_intra_class_duplicates(self):
        index, _ = make_index([25, 40, 15])
        batch = equal_sample(index, 15, np.random.default_rng(2))
        assert np.unique(batch.indices).size == batch.size

    def test_oversized_m_rejected(self):
        index, _ = make_index([10, 10])
        with pytest.raises(SamplingError):
            equal_sample(index, 11, np.random.default_rng(0))

    def test_deterministic_given_seed(self):
        index, _ = make_index([30, 30])
        a = equal_sample(index, 7, np.random.default_rng(5))
        b = equal_sample(index, 7, np.random.default_rng(5))
        np.testing.assert_array_equal(a.indices, b.indices)

    def test_provenance_tag(self):
        index, _ = make_index([5, 5])
        batch = equal_sample(index, 2, np.random.default_rng(0))
        assert set(batch.provenance) == {EQUAL_PART}


class TestWeights:
    def test_symmetric(self):
        np.testing.assert_allclose(misclassification_weights([5, 5]), [50.0, 50.0])

    def test_confusion_counts_hand_values(self):
        p = misclassification_weights([18, 37, 142, 43])
        np.testing.assert_allclose(p, [7.5, 37 * 100 / 240, 142 * 100 / 240, 43 * 100 / 240])
        np.testing.assert_allclose(np.round(p, 4), [7.5, 15.4167, 59.1667, 17.9167])
        assert p.sum() == pytest.approx(100.0, abs=1e-9)

    def test_all_correct_uniform_fallback(self):
        np.testing.assert_allclose(misclassification_weights([0, 0, 0, 0]), [25.0] * 4)

    def test_scale_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            w = rng.integers(0, 50, size=rng.integers(2, 6))
            if w.sum() == 0:
                continue
            base = misclassification_weights(w)
            scaled = misclassification_weights(w * 7)
            np.testing.assert_allclose(base, scaled)
            assert base.sum() == pytest.approx(100.0, abs=1e-9)


class TestQuotas:
    def test_symmetry(self):
        np.testing.assert_array_equal(allocate_quotas([50.0, 50.0], 100), [50, 50])

    def test_confusion_counts_round_trip(self):
        p = misclassification_weights([18, 37, 142, 43])
        np.testing.assert_array_equal(allocate_quotas(p, 240), [18, 37, 142, 43])

    def test_degenerate_weight(self):
        np.testing.assert_array_equal(allocate_quotas([100.0, 0.0], 10), [10, 0])

    def test_exhaustive_grid_sums_to_budget(self):
        # all integer-count weight vectors with n <= 4 classes, budget <= 20
        for n in (2, 3, 4):
            for budget in range(n, 21):
                rng = np.random.default_rng(n * 100 + budget)
                for _ in range(30):
                    w = rng.integers(0, 10, size=n)
                    p = misclassification_weights(w)
                    quotas = allocate_quotas(p, budget)
                    assert quotas.sum() == budget
                    assert np.all(quotas >= 0)


class TestEvaluateMisclassifications:
    def test_constant_classifier(self, binary_archive):
        from imet.data import load_dataset, normalize
        from imet.model import build_cnn

        ds = normalize(load_dataset(binary_archive, "train"))
        model = build_cnn(28, 28, 1, 2, seed=0)
        head = model.layers[-1]
        head.weights = np.zeros_like(head.weights)
        head.bias = np.array([-5.0])  # always predicts class 0
        index = partition_by_class(ds.labels, 2)
        eval_indices = np.concatenate([index.per_class[0][:10], index.per_class[1][:10]])
        report = evaluate_misclassifications(model, eval_indices, ds)
        np.testing.assert_array_equal(report.counts, [0, 10])
        np.testing.assert_allclose(report.weights_percent, [0.0, 100.0])

    def test_pools_partition_misclassified(self, binary_archive):
        from imet.data import load_dataset, normalize
        from imet.model import build_cnn

        ds = normalize(load_dataset(binary_archive, "train"))
        model = build_cnn(28, 28, 1, 2, seed=1)
        eval_indices = np.arange(ds.n_samples)
        report = evaluate_misclassifications(model, eval_indices, ds)
        merged = np.concatenate(report.per_class_misclassified)
        assert np.unique(merged).size == merged.size
        for k, pool in enumerate(report.per_class_misclassified):
            assert np.all(ds.labels[pool] == k)


class TestWeightedSample:
    def test_pools_first_then_top_up(self):
        index, labels = make_index([20, 20])
        pools = [index.per_class[0][:3], index.per_class[1][:12]]
        report = report_from_pools(index, pools)
        batch = weighted_sample(index, report, 20, np.random.default_rng(0))
        assert batch.size == 20
        quotas = allocate_quotas(report.weights_percent, 20)
        drawn = labels[batch.indices]
        np.testing.assert_array_equal(
            [(drawn == 0).sum(), (drawn == 1).sum()], quotas)
        # class 0 quota (4) exceeds its pool (3): all pool members must be in
        assert set(pools[0]).issubset(set(batch.indices))

    def test_budget_above_total_rejected(self):
        index, _ = make_index([5, 5])
        report = report_from_pools(index, [index.per_class[0][:1], index.per_class[1][:1]])
        with pytest.raises(SamplingError):
            weighted_sample(index, report, 11, np.random.default_rng(0))

    def test_spill_when_class_exhausted(self):
        # all weight on class 0, but class 0 has only 6 indices: spill to class 1
        index, labels = make_index([6, 30])
        report = report_from_pools(index, [index.per_class[0], index.per_class[1][:0]])
        batch = weighted_sample(index, report, 20, np.random.default_rng(0))
        assert batch.size == 20
        drawn = labels[batch.indices]
        assert (drawn == 0).sum() == 6
        assert (drawn == 1).sum() == 14
        assert np.unique(batch.indices).size == batch.size

    def test_provenance(self):
        index, _ = make_index([10, 10])
        report = report_from_pools(index, [index.per_class[0][:2], index.per_class[1][:2]])
        batch = weighted_sample(index, report, 8, np.random.default_rng(0))
        assert set(batch.provenance) == {WEIGHTED_PART}


class TestImetSample:
    def test_symmetric_composition(self):
        index, labels = make_index([60, 60])
        report = report_from_pools(index, [index.per_class[0][:5], index.per_class[1][:5]])
        batch = imet_sample(index, report, 100, np.random.default_rng(0))
        drawn = labels[batch.indices]
        equal_mask = batch.provenance == EQUAL_PART
        assert (drawn[equal_mask] == 0).sum() == 25
        assert (drawn[equal_mask] == 1).sum() == 25
        assert (drawn == 0).sum() == 50 and (drawn == 1).sum() == 50

    def test_lopsided_weights_composition(self):
        index, labels = make_index([80, 80])
        report = report_from_pools(index, [index.per_class[0][:40], index.per_class[1][:0]])
        batch = imet_sample(index, report, 100, np.random.default_rng(0))
        drawn = labels[batch.indices]
        assert (drawn == 0).sum() == 75  # 25 equal + 50 weighted
        assert (drawn == 1).sum() == 25  # 25 equal + 0 weighted

    def test_halves_within_rounding_slack(self):
        rng = np.random.default_rng(4)
        for n, sizes in ((2, [40, 55]), (3, [30, 30, 45]), (4, [25, 25, 25, 30])):
            index, _ = make_index(sizes, seed=n)
            pools = [a[: rng.integers(0, 5)] for a in index.per_class]
            report = report_from_pools(index, pools)
            for budget in (2 * n, 2 * n + 1, 25, 40, 49):
                batch = imet_sample(index, report, budget, rng)
                n_equal = int((batch.provenance == EQUAL_PART).sum())
                n_weighted = int((batch.provenance == WEIGHTED_PART).sum())
                assert abs(n_equal - n_weighted) <= n
                assert batch.size <= budget
                assert batch.size > budget - n

    def test_equal_part_is_balanced(self):
        index, labels = make_index([30, 40, 50])
        report = report_from_pools(index, [a[:4] for a in index.per_class])
        batch = imet_sample(index, report, 60, np.random.default_rng(1))
        equal_drawn = labels[batch.indices[batch.provenance == EQUAL_PART]]
        counts = np.bincount(equal_drawn, minlength=3)
        assert np.all(counts == counts[0])

    def test_budget_below_two_per_class_rejected(self):
        index, _ = make_index([10, 10])
        report = report_from_pools(index, [a[:1] for a in index.per_class])
        with pytest.raises(SamplingError):
            imet_sample(index, report, 3, np.random.default_rng(0))


class TestEvalSubset:
    def test_min_size_rule(self):
        index, labels = make_index([10, 4])
        subset = build_eval_subset(index, np.random.default_rng(0))
        assert subset.per_class_m == 4
        assert subset.indices.size == 8
        drawn = labels[subset.indices]
        assert (drawn == 0).sum() == 4 and (drawn == 1).sum() == 4
        assert np.unique(subset.indices).size == 8

    def test_balanced_classes_cover_whole_split(self):
        index, _ = make_index([6, 6])
        subset = build_eval_subset(index, np.random.default_rng(0))
        np.testing.assert_array_equal(np.sort(subset.indices), np.arange(12))


def test_full_pipeline_sampler_determinism():
    index, _ = make_index([50, 70, 90], seed=8)
    pools = [a[:7] for a in index.per_class]
    report = report_from_pools(index, pools)

    def sequence(seed):
        rng = np.random.default_rng(seed)
        out = [equal_sample(index, 10, rng).indices]
        out.append(weighted_sample(index, report, 30, rng).indices)
        out.append(imet_sample(index, report, 30, rng).indices)
        out.append(build_eval_subset(index, rng).indices)
        return out

    for a, b in zip(sequence(123), sequence(123)):
        np.testing.assert_array_equal(a, b)
