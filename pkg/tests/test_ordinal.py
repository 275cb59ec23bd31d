import numpy as np
import pytest

from hatestack.corpus import SeverityLabel
from hatestack.learners import LearnerConfig, fit_logistic
from hatestack.ordinal import (
    OrdinalError,
    binary_targets,
    combine_prob_arrays,
    combine_probs,
    fit_ordinal,
    label_from_distribution,
    predict_distributions,
    predict_ordinal,
)

LOGISTIC = LearnerConfig(kind="logistic", logistic_epochs=500, logistic_lr=1.0)


class TestCombine:
    def test_identity_case(self):
        d = combine_probs(0.0, 0.0)
        assert (d.p_clean, d.p_offensive, d.p_hate) == (1.0, 0.0, 0.0)

    def test_direct_substitution(self):
        d = combine_probs(0.6, 0.2)
        assert d.p_clean == pytest.approx(0.4, abs=1e-12)
        assert d.p_offensive == pytest.approx(0.4, abs=1e-12)
        assert d.p_hate == pytest.approx(0.2, abs=1e-12)

    def test_clamp_renormalize(self):
        d = combine_probs(0.3, 0.5)
        assert d.p_clean == pytest.approx(0.7 / 1.2, abs=1e-12)
        assert d.p_offensive == 0.0
        assert d.p_hate == pytest.approx(0.5 / 1.2, abs=1e-12)

    def test_simplex_on_grid(self):
        grid = np.linspace(0.0, 1.0, 101)
        nc, h = np.meshgrid(grid, grid)
        out = combine_prob_arrays(nc.ravel(), h.ravel())
        assert np.all(out >= -1e-15)
        assert np.max(np.abs(out.sum(axis=1) - 1.0)) < 1e-9

    def test_matches_formula_when_consistent(self):
        # Wherever p_hate <= p_not_clean the raw differencing formula holds.
        rng = np.random.default_rng(0)
        nc = rng.uniform(size=500)
        h = nc * rng.uniform(size=500)
        out = combine_prob_arrays(nc, h)
        assert np.allclose(out[:, 0], 1.0 - nc, atol=1e-12)
        assert np.allclose(out[:, 1], nc - h, atol=1e-12)
        assert np.allclose(out[:, 2], h, atol=1e-12)

    def test_monotone_in_not_clean(self):
        h = 0.1
        values = [combine_probs(p, h).p_clean for p in np.linspace(0.1, 0.9, 9)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_rejects_out_of_range(self):
        with pytest.raises(OrdinalError):
            combine_probs(1.2, 0.0)
        with pytest.raises(OrdinalError):
            combine_probs(0.5, -0.1)


class TestTargets:
    def test_indicator_definitions(self):
        labels = np.array([0, 1, 2])
        not_clean, hate = binary_targets(labels)
        assert not_clean.tolist() == [0.0, 1.0, 1.0]
        assert hate.tolist() == [0.0, 0.0, 1.0]


def ordinal_data(seed, n=600, d=4, thresholds=(-0.6, 0.9)):
    """Classes generated from a 1-D latent severity axis plus noise dims."""
    rng = np.random.default_rng(seed)
    z = rng.normal(size=n)
    labels = np.digitize(z, thresholds)
    X = rng.normal(size=(n, d)) * 0.8
    X[:, 0] = z + rng.normal(size=n) * 0.35
    return X, labels


class TestFitPredict:
    def test_missing_class_is_error(self):
        X = np.zeros((10, 2))
        with pytest.raises(OrdinalError, match="missing"):
            fit_ordinal(X, np.zeros(10, dtype=int), LOGISTIC)

    def test_predict_shapes_and_simplex(self):
        X, labels = ordinal_data(3, n=300)
        oc = fit_ordinal(X, labels, LOGISTIC)
        dists = predict_distributions(oc, X)
        assert dists.shape == (300, 3)
        assert np.max(np.abs(dists.sum(axis=1) - 1.0)) < 1e-9

    def test_tie_breaks_toward_less_severe(self):
        label, abstained = label_from_distribution(np.array([0.4, 0.4, 0.2]), 1 / 3)
        assert label is SeverityLabel.CLEAN
        assert not abstained

    def test_argmax_hate(self):
        label, abstained = label_from_distribution(np.array([0.2, 0.2, 0.6]), 1 / 3)
        assert label is SeverityLabel.HATE
        assert not abstained

    def test_uniform_is_not_abstained(self):
        label, abstained = label_from_distribution(np.array([1 / 3, 1 / 3, 1 / 3]), 1 / 3)
        assert label is SeverityLabel.CLEAN
        assert not abstained

    def test_below_threshold_abstains(self):
        _, abstained = label_from_distribution(np.array([0.32, 0.33, 0.35]), 0.36)
        assert abstained

    def test_single_prediction_api(self):
        X, labels = ordinal_data(4, n=300)
        oc = fit_ordinal(X, labels, LOGISTIC)
        dist, label = predict_ordinal(oc, X[0])
        assert label in list(SeverityLabel)
        assert dist.p_clean + dist.p_offensive + dist.p_hate == pytest.approx(1.0, abs=1e-9)


def naive_ovr_accuracy(X_train, y_train, X_test, y_test):
    probs = np.column_stack(
        [
            fit_logistic(X_train, (y_train == c).astype(float), epochs=500, lr=1.0).predict_prob(X_test)
            for c in range(3)
        ]
    )
    return float((np.argmax(probs, axis=1) == y_test).mean())


class TestOrdinalAdvantage:
    def test_beats_naive_on_latent_ordinal_data(self):
        wins = 0
        for seed in range(10):
            X, labels = ordinal_data(seed)
            cut = 400
            oc = fit_ordinal(X[:cut], labels[:cut], LOGISTIC)
            dists = predict_distributions(oc, X[cut:])
            preds = np.argmax(dists, axis=1)
            ours = float((preds == labels[cut:]).mean())
            naive = naive_ovr_accuracy(X[:cut], labels[:cut], X[cut:], labels[cut:])
            wins += ours >= naive
        assert wins >= 7

    def test_major_errors_rarer_than_minor(self):
        clean_as_hate = 0
        clean_as_off = 0
        for seed in range(10):
            X, labels = ordinal_data(seed)
            cut = 400
            oc = fit_ordinal(X[:cut], labels[:cut], LOGISTIC)
            preds = np.argmax(predict_distributions(oc, X[cut:]), axis=1)
            truth = labels[cut:]
            clean_as_hate += int(((truth == 0) & (preds == 2)).sum())
            clean_as_off += int(((truth == 0) & (preds == 1)).sum())
        assert clean_as_hate < clean_as_off
