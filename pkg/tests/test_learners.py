import numpy as np
import pytest

from hatestack.learners import (
    GBTParams,
    LearnerConfig,
    LearnerError,
    MLPParams,
    LogisticModel,
    fit_gbt,
    fit_logistic,
    fit_mlp,
    fit_standardizer,
    logistic_loss_grad,
    mlp_loss_grad,
    predict_prob,
)


class TestStandardizer:
    def test_constant_column_dropped(self):
        rng = np.random.default_rng(0)
        X = np.column_stack([np.full(50, 3.0), rng.normal(size=50)])
        std = fit_standardizer(X)
        assert std.kept_columns.tolist() == [1]

    def test_boundary_ratio_19_kept(self):
        # 95 zeros and 5 ones in 100 rows: ratio exactly 19, not > 19.
        col = np.array([0.0] * 95 + [1.0] * 5)
        X = np.column_stack([col, np.linspace(0, 1, 100)])
        std = fit_standardizer(X)
        assert 0 in std.kept_columns.tolist()

    def test_nzv_dropped(self):
        # 96/4 ratio = 24 > 19 and 2 distinct values out of 100 -> dropped.
        col = np.array([0.0] * 96 + [1.0] * 4)
        X = np.column_stack([col, np.linspace(0, 1, 100)])
        std = fit_standardizer(X)
        assert std.kept_columns.tolist() == [1]

    def test_normal_column_kept_and_scaled(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(500, 1))
        std = fit_standardizer(X)
        Z = std.transform(X)
        assert abs(Z.mean()) < 1e-9
        assert abs(Z.std(ddof=1) - 1.0) < 1e-9

    def test_self_transform_statistics(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(80, 6)) * rng.uniform(0.5, 4.0, size=6) + rng.normal(size=6)
        std = fit_standardizer(X)
        Z = std.transform(X)
        assert np.max(np.abs(Z.mean(axis=0))) < 1e-9
        assert np.max(np.abs(Z.std(axis=0, ddof=1) - 1.0)) < 1e-9

    def test_all_dropped_is_error(self):
        X = np.ones((30, 2))
        with pytest.raises(LearnerError, match="dropped"):
            fit_standardizer(X)

    def test_needs_two_rows(self):
        with pytest.raises(LearnerError):
            fit_standardizer(np.ones((1, 3)))


class TestLogistic:
    def test_separable_data(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(200, 2))
        y = (X[:, 0] + X[:, 1] > 0).astype(float)
        model = fit_logistic(X, y, l2=1e-6, epochs=3000, lr=1.0)
        acc = float(((model.predict_prob(X) > 0.5) == y).mean())
        assert acc >= 0.99

    def test_degenerate_labels_predict_class_rate(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(100, 3))
        y = np.ones(100)
        model = fit_logistic(X, y, l2=1e-2, epochs=4000, lr=0.5)
        probs = model.predict_prob(rng.normal(size=(50, 3)))
        assert np.all(np.abs(probs - 1.0) < 0.15)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(40, 4))
        y = (rng.random(40) > 0.5).astype(float)
        eps = 1e-6
        for _ in range(20):
            w = rng.normal(size=4)
            b = float(rng.normal())
            _, gw, gb = logistic_loss_grad(w, b, X, y, l2=0.01)
            for j in range(4):
                wp, wm = w.copy(), w.copy()
                wp[j] += eps
                wm[j] -= eps
                lp, _, _ = logistic_loss_grad(wp, b, X, y, l2=0.01)
                lm, _, _ = logistic_loss_grad(wm, b, X, y, l2=0.01)
                assert abs((lp - lm) / (2 * eps) - gw[j]) <= 1e-5
            lp, _, _ = logistic_loss_grad(w, b + eps, X, y, l2=0.01)
            lm, _, _ = logistic_loss_grad(w, b - eps, X, y, l2=0.01)
            assert abs((lp - lm) / (2 * eps) - gb) <= 1e-5

    def test_zero_weights_predict_half(self):
        model = LogisticModel(weights=np.zeros(3), bias=0.0)
        assert predict_prob(model, np.array([[5.0, -2.0, 1.0]]))[0] == 0.5

    def test_dimension_mismatch(self):
        model = LogisticModel(weights=np.zeros(3), bias=0.0)
        with pytest.raises(LearnerError):
            model.predict_prob(np.zeros((2, 4)))


def xor_data(n=200, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, size=(n, 2))
    y = ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(float)
    return X, y


class TestGBT:
    def test_xor_learnable(self):
        X, y = xor_data()
        model = fit_gbt(X, y, GBTParams(n_trees=50, max_depth=2, learning_rate=0.3, min_leaf=2))
        acc = float(((model.predict_prob(X) > 0.5) == y).mean())
        assert acc >= 0.95

    def test_xor_not_linearly_separable(self):
        # Population-level a linear boundary is worthless on XOR; finite
        # draws give it some slack, but the GBT margin must stay wide.
        X, y = xor_data()
        linear = fit_logistic(X, y, epochs=2000)
        acc = float(((linear.predict_prob(X) > 0.5) == y).mean())
        assert acc <= 0.8

    def test_zero_trees_predicts_prior(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(50, 3))
        y = np.array([1.0] * 20 + [0.0] * 30)
        model = fit_gbt(X, y, GBTParams(n_trees=0))
        probs = model.predict_prob(rng.normal(size=(10, 3)))
        assert np.allclose(probs, 0.4, atol=1e-12)

    def test_training_loss_monotone(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(150, 5))
        y = (X[:, 0] * X[:, 1] > 0).astype(float)
        model = fit_gbt(X, y, GBTParams(n_trees=40, max_depth=3, learning_rate=0.1, min_leaf=3))
        trace = np.array(model.loss_trace)
        assert np.all(np.diff(trace) <= 1e-12)

    def test_single_stump_hand_value(self):
        # Balanced labels: base score 0, residuals +-0.5, hessians 0.25,
        # so each leaf's Newton value is +-2 and the prediction is
        # sigmoid(0.1 * +-2).
        X = np.array([[0.0], [1.0]])
        y = np.array([0.0, 1.0])
        model = fit_gbt(X, y, GBTParams(n_trees=1, max_depth=1, learning_rate=0.1, min_leaf=1))
        lo = model.predict_prob(np.array([[0.0]]))[0]
        hi = model.predict_prob(np.array([[1.0]]))[0]
        assert lo == pytest.approx(1.0 / (1.0 + np.exp(0.2)), abs=1e-12)
        assert hi == pytest.approx(1.0 / (1.0 + np.exp(-0.2)), abs=1e-12)

    def test_row_order_invariance(self):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(80, 4))
        y = (X[:, 0] > 0.2).astype(float)
        params = GBTParams(n_trees=15, max_depth=2, learning_rate=0.2, min_leaf=2)
        model_a = fit_gbt(X, y, params)
        perm = rng.permutation(80)
        model_b = fit_gbt(X[perm], y[perm], params)
        probe = rng.normal(size=(25, 4))
        assert np.allclose(model_a.predict_prob(probe), model_b.predict_prob(probe), atol=1e-12)

    def test_deterministic(self):
        X, y = xor_data(seed=3)
        params = GBTParams(n_trees=10, max_depth=2)
        a = fit_gbt(X, y, params).predict_prob(X)
        b = fit_gbt(X, y, params).predict_prob(X)
        assert np.array_equal(a, b)

    def test_min_leaf_respected(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        model = fit_gbt(X, y, GBTParams(n_trees=1, max_depth=3, min_leaf=2))
        for tree in model.trees:
            assert tree.feature.shape[0] <= 3  # one split max with min_leaf=2


def blobs(seed=0, n=240):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 3, size=n)
    centers = np.array([[0.0, 4.0], [4.0, -2.0], [-4.0, -2.0]])
    X = centers[labels] + rng.normal(size=(n, 2))
    return X, labels


class TestMLP:
    def test_blobs_learnable(self):
        X, labels = blobs(seed=2)
        model = fit_mlp(X, labels, MLPParams(hidden=16, epochs=150, lr=0.2, seed=1))
        acc = float((np.argmax(model.predict_prob(X), axis=1) == labels).mean())
        assert acc >= 0.95

    def test_outputs_are_simplex(self):
        X, labels = blobs(seed=4)
        model = fit_mlp(X, labels, MLPParams(hidden=8, epochs=20, seed=0))
        rng = np.random.default_rng(0)
        probs = model.predict_prob(rng.normal(size=(50, 2)) * 10)
        assert np.all(probs >= 0)
        assert np.max(np.abs(probs.sum(axis=1) - 1.0)) < 1e-9

    def test_deterministic_under_seed(self):
        X, labels = blobs(seed=5)
        params = MLPParams(hidden=8, epochs=30, seed=7)
        a = fit_mlp(X, labels, params).predict_prob(X)
        b = fit_mlp(X, labels, params).predict_prob(X)
        assert np.array_equal(a, b)
        c = fit_mlp(X, labels, MLPParams(hidden=8, epochs=30, seed=8)).predict_prob(X)
        assert not np.array_equal(a, c)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(20, 3))
        labels = rng.integers(0, 3, size=20)
        Y = np.zeros((20, 3))
        Y[np.arange(20), labels] = 1.0
        eps = 1e-6
        for trial in range(20):
            model = fit_mlp(X, labels, MLPParams(hidden=5, epochs=1, seed=trial))
            loss, (gw1, gb1, gw2, gb2) = mlp_loss_grad(model, X, Y, l2=0.01)
            for arr, grad in ((model.w1, gw1), (model.b1, gb1), (model.w2, gw2), (model.b2, gb2)):
                flat = arr.ravel()
                idx = int(rng.integers(flat.shape[0]))
                orig = flat[idx]
                flat[idx] = orig + eps
                lp, _ = mlp_loss_grad(model, X, Y, l2=0.01)
                flat[idx] = orig - eps
                lm, _ = mlp_loss_grad(model, X, Y, l2=0.01)
                flat[idx] = orig
                numeric = (lp - lm) / (2 * eps)
                analytic = grad.ravel()[idx]
                denom = max(abs(numeric), abs(analytic), 1e-8)
                assert abs(numeric - analytic) / denom <= 1e-4

    def test_memorizes_training_points(self):
        X, labels = blobs(seed=9, n=60)
        model = fit_mlp(X, labels, MLPParams(hidden=32, epochs=400, lr=0.3, l2=0.0, seed=3))
        preds = np.argmax(model.predict_prob(X), axis=1)
        assert (preds == labels).mean() >= 0.98


class TestLearnerConfig:
    def test_unknown_kind_rejected(self):
        with pytest.raises(LearnerError):
            LearnerConfig(kind="svm")
