import json

import numpy as np
import pytest
from helpers import brute_force_top_n

from cla.errors import ValidationError
from cla.evaluation import (
    _fold_splits,
    cross_validate_lambda,
    per_class_top_n,
    report_to_json,
    report_to_text,
)
from cla.synthetic import SyntheticConfig, generate_synthetic


class TestPerClassTopN:
    def test_perfect_scores(self):
        truth = np.array([0, 1, 2, 0])
        scores = np.zeros((3, 4))
        scores[truth, np.arange(4)] = 1.0
        report = per_class_top_n(scores, truth, 1)
        for n, acc in report.top_n_accuracy.items():
            assert acc == 100.0

    def test_all_predicted_class_zero(self):
        # balanced two-class problem, every prediction lands on class 0
        scores = np.zeros((2, 4))
        scores[0] = 1.0
        truth = np.array([0, 0, 1, 1])
        report = per_class_top_n(scores, truth, 1)
        assert report.top_n_accuracy[1] == pytest.approx(50.0)
        assert report.per_class_accuracy[0] == pytest.approx(100.0)
        assert report.per_class_accuracy[1] == pytest.approx(0.0)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_sort_oracle(self, seed):
        rng = np.random.default_rng(seed)
        k_u, n_samples = 5, 200
        scores = rng.standard_normal((k_u, n_samples))
        truth = rng.integers(0, k_u, n_samples)
        for n in (1, 2, 3, 5):
            report = per_class_top_n(scores, truth, n)
            ref, per_class_ref = brute_force_top_n(scores, truth, n)
            assert report.top_n_accuracy[n] == pytest.approx(ref, abs=1e-12)
            for c, acc in per_class_ref.items():
                assert report.per_class_accuracy[c] == pytest.approx(acc)

    def test_top_n_monotone(self):
        rng = np.random.default_rng(3)
        scores = rng.standard_normal((6, 100))
        truth = rng.integers(0, 6, 100)
        report = per_class_top_n(scores, truth, 5)
        accs = [report.top_n_accuracy[n] for n in sorted(report.top_n_accuracy)]
        assert all(a <= b + 1e-12 for a, b in zip(accs, accs[1:]))

    def test_sample_permutation_invariant(self):
        rng = np.random.default_rng(4)
        scores = rng.standard_normal((4, 50))
        truth = rng.integers(0, 4, 50)
        perm = rng.permutation(50)
        a = per_class_top_n(scores, truth, 2)
        b = per_class_top_n(scores[:, perm], truth[perm], 2)
        assert a.top_n_accuracy == b.top_n_accuracy

    def test_duplicating_a_class_leaves_headline_unchanged(self):
        rng = np.random.default_rng(5)
        scores = rng.standard_normal((3, 30))
        truth = rng.integers(0, 3, 30)
        dup = truth == 1
        scores2 = np.hstack([scores, scores[:, dup]])
        truth2 = np.concatenate([truth, truth[dup]])
        a = per_class_top_n(scores, truth, 1)
        b = per_class_top_n(scores2, truth2, 1)
        assert a.top_n_accuracy[1] == pytest.approx(b.top_n_accuracy[1])

    def test_missing_class_excluded_and_flagged(self):
        scores = np.zeros((3, 2))
        scores[0] = 1.0
        truth = np.array([0, 0])  # classes 1, 2 absent
        report = per_class_top_n(scores, truth, 1)
        assert report.missing_classes == (1, 2)
        assert report.top_n_accuracy[1] == pytest.approx(100.0)
        assert np.isnan(report.per_class_accuracy[1])

    def test_tie_handling_uses_low_index_order(self):
        # class 2 ties with classes 0 and 1; low-index order ranks it third
        scores = np.array([[1.0], [1.0], [1.0]])
        truth = np.array([2])
        assert per_class_top_n(scores, truth, 2).top_n_accuracy[2] == 0.0
        assert per_class_top_n(scores, truth, 3).top_n_accuracy[3] == 100.0

    def test_bad_rank_rejected(self):
        with pytest.raises(ValidationError):
            per_class_top_n(np.ones((2, 1)), np.array([0]), 3)

    def test_report_serialization_round_trip(self):
        rng = np.random.default_rng(6)
        scores = rng.standard_normal((3, 12))
        truth = rng.integers(0, 3, 12)
        report = per_class_top_n(scores, truth, 2, config_digest="case6")
        text = report_to_text(report)
        assert "config_digest=case6" in text
        assert text.endswith("\n")
        payload = json.loads(report_to_json(report))
        assert payload["config_digest"] == "case6"
        assert payload["n_samples"] == 12


class TestFoldSplits:
    def test_awa_shaped_ratio(self):
        # 40 seen / 10 unseen: each fold holds out 8 pseudo-unseen classes
        splits = _fold_splits(40, 10, 5)
        assert all(len(s) == 8 for s in splits)
        covered = np.unique(np.concatenate(splits))
        assert covered.size == 40

    def test_minimum_one_class(self):
        splits = _fold_splits(4, 2, 2)
        assert all(len(s) >= 1 for s in splits)


class TestCrossValidateLambda:
    def make_dataset(self, noise=0.4, seed=9):
        return generate_synthetic(
            SyntheticConfig(
                feature_dim=6, k_seen=8, k_unseen=4, samples_per_class=6,
                n_spaces=1, semantic_dim=4, noise=noise, seed=seed,
            )
        )

    def test_single_value_grid(self):
        ds = self.make_dataset()
        best, scores = cross_validate_lambda(
            ds.seen_features, ds.seen_labels, ds.semantic_spaces,
            ds.k_seen, ds.k_unseen, grid=(0.5,), folds=2,
        )
        assert best == 0.5
        assert set(scores) == {0.5}

    def test_chosen_lambda_attains_grid_maximum(self):
        ds = self.make_dataset()
        grid = (0.01, 1.0, 100.0)
        best, scores = cross_validate_lambda(
            ds.seen_features, ds.seen_labels, ds.semantic_spaces,
            ds.k_seen, ds.k_unseen, grid=grid, folds=2,
        )
        assert scores[best] == max(scores.values())
        # ties break toward the smaller lambda
        ties = [lam for lam in sorted(grid) if scores[lam] == scores[best]]
        assert best == ties[0]

    def test_too_few_classes_rejected(self):
        ds = self.make_dataset()
        with pytest.raises(ValidationError):
            cross_validate_lambda(
                ds.seen_features, ds.seen_labels, ds.semantic_spaces,
                ds.k_seen, ds.k_unseen, grid=(1.0,), folds=20,
            )

    def test_deterministic(self):
        ds = self.make_dataset()
        args = (ds.seen_features, ds.seen_labels, ds.semantic_spaces,
                ds.k_seen, ds.k_unseen)
        a = cross_validate_lambda(*args, grid=(0.1, 10.0), folds=2)
        b = cross_validate_lambda(*args, grid=(0.1, 10.0), folds=2)
        assert a == b
