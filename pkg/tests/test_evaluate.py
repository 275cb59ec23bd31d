import math

import numpy as np
import pytest

from hatestack.corpus import SeverityLabel
from hatestack.evaluate import (
    EvalError,
    agreement,
    class_metrics,
    confusion,
    cross_platform_grid,
    evaluate_predictions,
    ordinal_errors,
    roc_auc_ovr,
)

C, O, H = SeverityLabel.CLEAN, SeverityLabel.OFFENSIVE, SeverityLabel.HATE


def cm_from_counts(counts, abstained=(0, 0, 0), mode="as_error"):
    """Build a ConfusionMatrix via the public API from a counts grid."""
    preds, truth = [], []
    for i, row in enumerate(counts):
        for j, k in enumerate(row):
            preds.extend([SeverityLabel(j)] * k)
            truth.extend([SeverityLabel(i)] * k)
    for i, k in enumerate(abstained):
        preds.extend([None] * k)
        truth.extend([SeverityLabel(i)] * k)
    return confusion(preds, truth, mode)


class TestConfusion:
    def test_perfect_diagonal(self):
        cm = cm_from_counts([[10, 0, 0], [0, 10, 0], [0, 0, 10]])
        assert np.array_equal(np.diag(cm.counts), [10, 10, 10])
        assert cm.abstention_count == 0

    def test_single_major_error(self):
        cm = cm_from_counts([[0, 0, 1], [0, 0, 0], [0, 0, 0]])
        assert cm.counts[0, 2] == 1

    def test_abstention_denominators(self):
        cm = cm_from_counts([[4, 0, 0], [0, 2, 0], [0, 0, 2]], abstained=(1, 0, 1))
        assert cm.abstention_count == 2
        report = class_metrics(cm)
        assert report.accuracy == pytest.approx(8 / 10)

    def test_excluded_mode(self):
        cm = cm_from_counts([[4, 0, 0], [0, 2, 0], [0, 0, 2]], abstained=(1, 0, 1), mode="excluded")
        report = class_metrics(cm)
        assert report.accuracy == pytest.approx(1.0)
        assert np.trace(cm.counts) / cm.counts.sum() == pytest.approx(report.accuracy)

    def test_length_mismatch(self):
        with pytest.raises(EvalError):
            confusion([C], [C, O])


class TestClassMetrics:
    def test_hand_example(self):
        cm = cm_from_counts([[8, 1, 1], [2, 6, 2], [1, 1, 8]])
        report = class_metrics(cm)
        assert report.accuracy == pytest.approx(22 / 30)
        assert report.precision[2] == pytest.approx(8 / 11)
        assert report.recall[2] == pytest.approx(8 / 10)

    def test_perfect(self):
        report = class_metrics(cm_from_counts([[5, 0, 0], [0, 5, 0], [0, 0, 5]]))
        assert report.accuracy == 1.0
        assert np.allclose(report.precision, 1.0)
        assert np.allclose(report.recall, 1.0)
        assert np.allclose(report.f1, 1.0)

    def test_empty_column_flagged(self):
        report = class_metrics(cm_from_counts([[5, 1, 0], [1, 5, 0], [2, 2, 0]]))
        assert report.precision[2] == 0.0
        assert any("hate" in f for f in report.zero_division_flags)

    def test_f1_is_harmonic_mean(self):
        report = class_metrics(cm_from_counts([[7, 2, 1], [3, 5, 2], [1, 2, 6]]))
        for i in range(3):
            p, r = report.precision[i], report.recall[i]
            assert report.f1[i] == pytest.approx(2 * p * r / (p + r))

    def test_matches_raw_pair_tally(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            n = int(rng.integers(5, 60))
            truth = [SeverityLabel(int(x)) for x in rng.integers(0, 3, size=n)]
            preds = [SeverityLabel(int(x)) for x in rng.integers(0, 3, size=n)]
            report = class_metrics(confusion(preds, truth, "as_error"))
            # independent tally straight off the pairs
            acc = sum(p == t for p, t in zip(preds, truth)) / n
            assert report.accuracy == pytest.approx(acc, abs=1e-15)
            for c in range(3):
                tp = sum(1 for p, t in zip(preds, truth) if int(p) == c and int(t) == c)
                fp = sum(1 for p, t in zip(preds, truth) if int(p) == c and int(t) != c)
                fn = sum(1 for p, t in zip(preds, truth) if int(p) != c and int(t) == c)
                prec = tp / (tp + fp) if tp + fp else 0.0
                rec = tp / (tp + fn) if tp + fn else 0.0
                assert report.precision[c] == pytest.approx(prec, abs=1e-15)
                assert report.recall[c] == pytest.approx(rec, abs=1e-15)

    def test_accuracy_halfwidth(self):
        report = class_metrics(cm_from_counts([[80, 10, 0], [5, 5, 0], [0, 0, 0]]))
        acc = report.accuracy
        expected = 1.96 * math.sqrt(acc * (1 - acc) / 100)
        assert report.accuracy_halfwidth == pytest.approx(expected)


class TestOrdinalErrors:
    def test_hand_example(self):
        cm = cm_from_counts([[90, 8, 2], [5, 20, 5], [3, 4, 13]])
        err = ordinal_errors(cm)
        assert err["clean_as_hate_rate"] == pytest.approx(2 / 100)
        assert err["hate_as_clean_rate"] == pytest.approx(3 / 20)

    def test_diagonal_all_zero(self):
        err = ordinal_errors(cm_from_counts([[5, 0, 0], [0, 5, 0], [0, 0, 5]]))
        assert err == {"clean_as_hate_rate": 0.0, "hate_as_clean_rate": 0.0, "minor_error_rate": 0.0}

    def test_all_adjacent_errors(self):
        err = ordinal_errors(cm_from_counts([[5, 3, 0], [2, 5, 1], [0, 4, 5]]))
        assert err["minor_error_rate"] == 1.0


def auc_pair_oracle(scores, positives):
    """Brute-force pair counting with half-credit ties."""
    pos = [s for s, p in zip(scores, positives) if p]
    neg = [s for s, p in zip(scores, positives) if not p]
    total = 0.0
    for a in pos:
        for b in neg:
            if a > b:
                total += 1.0
            elif a == b:
                total += 0.5
    return total / (len(pos) * len(neg))


class TestAUC:
    def simplex(self, scores):
        scores = np.asarray(scores, dtype=np.float64)
        rest = (1.0 - scores) / 2.0
        return np.column_stack([scores, rest, rest])

    def test_perfect_ranking(self):
        probs = self.simplex([0.9, 0.8, 0.2, 0.1])
        truth = [C, C, O, H]
        auc = roc_auc_ovr(probs, truth)
        assert auc[0] == 1.0

    def test_constant_scores_half(self):
        probs = self.simplex([0.5, 0.5, 0.5, 0.5])
        truth = [C, O, C, H]
        assert roc_auc_ovr(probs, truth)[0] == 0.5

    def test_four_point_hand_example(self):
        probs = self.simplex([0.9, 0.6, 0.4, 0.1])
        truth = [C, O, C, O]
        assert roc_auc_ovr(probs, truth)[0] == 0.75

    def test_absent_class_flagged_nan(self):
        probs = self.simplex([0.9, 0.1])
        truth = [C, C]
        auc = roc_auc_ovr(probs, truth)
        assert np.isnan(auc[2])
        assert np.isnan(auc[0])  # class covers everything: also undefined

    def test_matches_exhaustive_pair_counting(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            n = int(rng.integers(4, 51))
            # quantized scores force plenty of ties
            scores = rng.integers(0, 5, size=n) / 4.0
            truth = [SeverityLabel(int(x)) for x in rng.integers(0, 3, size=n)]
            probs = np.column_stack([scores, (1 - scores) / 2, (1 - scores) / 2])
            auc = roc_auc_ovr(probs, truth)
            positives = [t is C for t in truth]
            if any(positives) and not all(positives):
                assert auc[0] == auc_pair_oracle(scores.tolist(), positives)


def kappa_oracle(a, b):
    n = len(a)
    cats = sorted(set(a) | set(b))
    p_o = sum(x == y for x, y in zip(a, b)) / n
    p_e = sum(
        (sum(x == c for x in a) / n) * (sum(y == c for y in b) / n) for c in cats
    )
    if p_o == 1.0:
        return 1.0
    return (p_o - p_e) / (1 - p_e)


def alpha_oracle(a, b, metric="ordinal"):
    """Textbook two-coder Krippendorff alpha over pairable values."""
    values = list(a) + list(b)
    cats = sorted(set(values))
    n_p = len(values)
    n_c = {c: values.count(c) for c in cats}

    def delta2(c, k):
        if c == k:
            return 0.0
        if metric == "nominal":
            return 1.0
        lo, hi = (c, k) if c < k else (k, c)
        span = sum(n_c[g] for g in cats if lo <= g <= hi) - (n_c[lo] + n_c[hi]) / 2.0
        return span**2

    d_o = sum(2.0 * delta2(x, y) for x, y in zip(a, b)) / n_p
    d_e = sum(
        n_c[c] * n_c[k] * delta2(c, k) for c in cats for k in cats
    ) / (n_p * (n_p - 1))
    if d_e == 0.0:
        return 1.0
    return 1.0 - d_o / d_e


class TestAgreement:
    def test_identical_lists(self):
        labels = [C, O, H, C, O, H, C]
        report = agreement(labels, labels)
        assert report.percent_agreement == 1.0
        assert report.cohen_kappa == 1.0
        assert report.krippendorff_alpha_ordinal == 1.0

    def test_binary_kappa_hand_example(self):
        # agreement table [[20, 5], [5, 20]] -> kappa (0.8 - 0.5) / 0.5 = 0.6
        a = [C] * 25 + [H] * 25
        b = [C] * 20 + [H] * 5 + [C] * 5 + [H] * 20
        report = agreement(a, b)
        assert report.percent_agreement == pytest.approx(0.8)
        assert report.cohen_kappa == pytest.approx(0.6)

    def test_ordinal_alpha_exceeds_nominal_for_adjacent_disagreements(self):
        # 12 items, all disagreements between adjacent classes
        a = [C, C, C, C, O, O, O, O, H, H, H, H]
        b = [C, C, C, O, O, O, O, H, H, H, H, H]
        report = agreement(a, b)
        nominal = alpha_oracle([int(x) for x in a], [int(x) for x in b], metric="nominal")
        assert report.krippendorff_alpha_ordinal > nominal

    def test_matches_textbook_oracles(self):
        rng = np.random.default_rng(21)
        for _ in range(30):
            n = int(rng.integers(4, 40))
            n_cats = int(rng.integers(2, 6))
            a = [int(x) for x in rng.integers(0, n_cats, size=n)]
            b = [int(x) for x in rng.integers(0, n_cats, size=n)]
            report = agreement(a, b)
            assert report.cohen_kappa == pytest.approx(kappa_oracle(a, b), abs=1e-12)
            assert report.krippendorff_alpha_ordinal == pytest.approx(
                alpha_oracle(a, b), abs=1e-12
            )

    def test_length_mismatch(self):
        with pytest.raises(EvalError):
            agreement([C], [C, O])

    def test_empty(self):
        with pytest.raises(EvalError):
            agreement([], [])


class TestEvaluatePredictions:
    def test_combined_report(self):
        probs = np.array([[0.8, 0.1, 0.1], [0.2, 0.6, 0.2], [0.1, 0.2, 0.7]])
        preds = [C, O, H]
        truth = [C, O, H]
        report = evaluate_predictions(preds, truth, probs)
        assert report.accuracy == 1.0
        assert report.auc is not None


class TestCrossPlatformGrid:
    def test_grid_shape_and_diagonal(self, tiny_study, resources):
        models = tiny_study["models"]
        tests = tiny_study["tests"]
        provider = tiny_study["provider"]
        grid = cross_platform_grid(models, tests, resources, provider)
        platforms = [m.platform for m in models]
        assert set(grid) == {(mp, dp) for mp in platforms for dp in platforms}
        saved = {}
        for model in models:
            dists, labels, abstained, kept = model.predict_dataset(
                tests[model.platform], resources, provider
            )
            truth = [tests[model.platform][i].label for i in kept]
            preds = [None if ab else l for l, ab in zip(labels, abstained)]
            saved[model.platform] = class_metrics(confusion(preds, truth, "as_error")).accuracy
        for platform, acc in saved.items():
            assert grid[(platform, platform)].accuracy == pytest.approx(acc)

    def test_empty_test_set_error(self, tiny_study, resources):
        from hatestack.corpus import Dataset

        with pytest.raises(EvalError, match="empty"):
            cross_platform_grid(
                tiny_study["models"],
                {"empty": Dataset(())},
                resources,
                tiny_study["provider"],
            )
