"""Base learners built on numpy: standardization with a near-zero-variance
filter, L2 logistic regression, gradient-boosted regression trees with a
logistic objective, and a one-hidden-layer softmax MLP for the meta stage.

All fits are deterministic given their inputs (and seed, where one
exists); there is no row or column subsampling anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from .util import rng_for


class LearnerError(Exception):
    pass


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


# ---------------------------------------------------------------------------
# Standardizer with near-zero-variance filtering


@dataclass
class Standardizer:
    kept_columns: np.ndarray  # int indices into the original columns
    means: np.ndarray
    scales: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        return (X[:, self.kept_columns] - self.means) / self.scales


def fit_standardizer(X: np.ndarray) -> Standardizer:
    """Drop constant and near-zero-variance columns, then center/scale.

    A column is near-zero-variance when its most/second-most frequent value
    ratio exceeds 19 AND its distinct-value fraction is below 10%. Standard
    deviations use the n-1 denominator.
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if n < 2:
        raise LearnerError("standardizer needs at least 2 rows")
    kept = []
    for j in range(d):
        _, counts = np.unique(X[:, j], return_counts=True)
        if counts.shape[0] == 1:
            continue  # constant
        top2 = np.sort(counts)[::-1][:2]
        freq_ratio = top2[0] / top2[1]
        distinct_frac = counts.shape[0] / n
        if freq_ratio > 19.0 and distinct_frac < 0.1:
            continue
        kept.append(j)
    if not kept:
        raise LearnerError("all columns dropped by the near-zero-variance filter")
    kept_arr = np.array(kept, dtype=np.int64)
    sub = X[:, kept_arr]
    return Standardizer(
        kept_columns=kept_arr,
        means=sub.mean(axis=0),
        scales=sub.std(axis=0, ddof=1),
    )


# ---------------------------------------------------------------------------
# Logistic regression


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float

    def predict_prob(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.weights.shape[0]:
            raise LearnerError(
                f"input has {X.shape[1]} features, model expects {self.weights.shape[0]}"
            )
        return _sigmoid(X @ self.weights + self.bias)


def logistic_loss_grad(
    w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float
) -> tuple[float, np.ndarray, float]:
    """Mean logistic loss with L2 penalty on the weights (not the bias),
    and its analytic gradient. Exposed so tests can finite-difference it."""
    z = X @ w + b
    # log(1 + e^z) - y z, computed stably
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w))
    p = _sigmoid(z)
    resid = p - y
    grad_w = X.T @ resid / X.shape[0] + l2 * w
    grad_b = float(np.mean(resid))
    return loss, grad_w, grad_b


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    l2: float = 1e-4,
    epochs: int = 2000,
    lr: float = 0.5,
) -> LogisticModel:
    """Full-batch gradient descent to gradient norm < 1e-6 or the epoch cap."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.zeros(X.shape[1])
    b = 0.0
    for _ in range(epochs):
        loss, gw, gb = logistic_loss_grad(w, b, X, y, l2)
        if not np.isfinite(loss):
            raise LearnerError("logistic loss became non-finite; reduce the learning rate")
        if np.sqrt(gw @ gw + gb * gb) < 1e-6:
            break
        w -= lr * gw
        b -= lr * gb
    return LogisticModel(weights=w, bias=b)


# ---------------------------------------------------------------------------
# Gradient-boosted trees, logistic objective


@dataclass
class GBTParams:
    n_trees: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    min_leaf: int = 5


@dataclass
class Tree:
    """Flat array representation; children of -1 mark a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            at_leaf = self.left[node] < 0
            if np.all(at_leaf):
                break
            active = ~at_leaf
            rows = np.flatnonzero(active)
            cur = node[rows]
            goes_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(goes_left, self.left[cur], self.right[cur])
        return self.value[node]


def _best_split(X: np.ndarray, residual: np.ndarray, min_leaf: int):
    """Variance-reduction split over all features at once.

    Ties break toward the lower feature index, then the lower threshold
    position, via strict argmax semantics.
    """
    m, d = X.shape
    if m < 2 * min_leaf:
        return None
    order = np.argsort(X, axis=0, kind="stable")
    sorted_x = np.take_along_axis(X, order, axis=0)
    sorted_r = residual[order]
    csum = np.cumsum(sorted_r, axis=0)
    total = csum[-1, 0]
    left_n = np.arange(1, m, dtype=np.float64)[:, None]
    right_n = m - left_n
    left_sum = csum[:-1]
    right_sum = total - left_sum
    gain = left_sum**2 / left_n + right_sum**2 / right_n - total**2 / m
    distinct = sorted_x[:-1] < sorted_x[1:]
    ok_size = (left_n >= min_leaf) & (right_n >= min_leaf)
    gain = np.where(distinct & ok_size, gain, -np.inf)
    flat = int(np.argmax(gain.T))  # row-major over (feature, position)
    best_feature, best_pos = divmod(flat, m - 1)
    best_gain = gain[best_pos, best_feature]
    if not np.isfinite(best_gain) or best_gain <= 1e-12:
        return None
    threshold = 0.5 * (sorted_x[best_pos, best_feature] + sorted_x[best_pos + 1, best_feature])
    return best_feature, float(threshold), best_gain


def _fit_tree(X: np.ndarray, residual: np.ndarray, hessian: np.ndarray, params: GBTParams) -> Tree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[float] = []

    def leaf_value(idx: np.ndarray) -> float:
        h = hessian[idx].sum()
        return float(residual[idx].sum() / max(h, 1e-12))

    def build(idx: np.ndarray, depth: int) -> int:
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        split = None
        if depth < params.max_depth:
            split = _best_split(X[idx], residual[idx], params.min_leaf)
        if split is None:
            value[node] = leaf_value(idx)
            return node
        f, thr, _ = split
        feature[node] = f
        threshold[node] = thr
        goes_left = X[idx, f] <= thr
        left[node] = build(idx[goes_left], depth + 1)
        right[node] = build(idx[~goes_left], depth + 1)
        return node

    build(np.arange(X.shape[0]), 0)
    return Tree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value, dtype=np.float64),
    )


@dataclass
class GBTModel:
    trees: list[Tree]
    learning_rate: float
    base_score: float
    loss_trace: list[float] = field(default_factory=list, repr=False)

    @property
    def n_features(self) -> int | None:
        return None  # trees carry feature indices; dimension checked lazily

    def predict_raw(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        score = np.full(X.shape[0], self.base_score)
        for tree in self.trees:
            score += self.learning_rate * tree.predict(X)
        return score

    def predict_prob(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.predict_raw(X))


def fit_gbt(X: np.ndarray, y: np.ndarray, params: GBTParams | None = None) -> GBTModel:
    """Stagewise regression trees on the logistic-loss negative gradient.

    Splits maximize variance reduction of the residuals; leaf values are
    Newton steps (sum residual / sum hessian), so each tree contributes
    additive log-odds.
    """
    params = params or GBTParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    prior = float(np.clip(y.mean(), 1e-6, 1.0 - 1e-6))
    base = float(np.log(prior / (1.0 - prior)))
    score = np.full(X.shape[0], base)
    trees: list[Tree] = []
    trace: list[float] = []
    trace.append(float(np.mean(np.logaddexp(0.0, score) - y * score)))
    for _ in range(params.n_trees):
        p = _sigmoid(score)
        residual = y - p
        hessian = p * (1.0 - p)
        tree = _fit_tree(X, residual, hessian, params)
        trees.append(tree)
        score = score + params.learning_rate * tree.predict(X)
        trace.append(float(np.mean(np.logaddexp(0.0, score) - y * score)))
    return GBTModel(trees=trees, learning_rate=params.learning_rate, base_score=base, loss_trace=trace)


# ---------------------------------------------------------------------------
# One-hidden-layer MLP with softmax output


@dataclass
class MLPParams:
    hidden: int = 32
    epochs: int = 300
    lr: float = 0.1
    l2: float = 1e-4
    batch: int = 32
    seed: int = 0


@dataclass
class MLPModel:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def predict_prob(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.w1.shape[0]:
            raise LearnerError(
                f"input has {X.shape[1]} features, model expects {self.w1.shape[0]}"
            )
        hidden = np.tanh(X @ self.w1 + self.b1)
        logits = hidden @ self.w2 + self.b2
        logits -= logits.max(axis=1, keepdims=True)
        expz = np.exp(logits)
        return expz / expz.sum(axis=1, keepdims=True)


def mlp_loss_grad(model: MLPModel, X: np.ndarray, Y: np.ndarray, l2: float):
    """Mean cross-entropy + L2 on weight matrices, with analytic gradients."""
    n = X.shape[0]
    hidden = np.tanh(X @ model.w1 + model.b1)
    logits = hidden @ model.w2 + model.b2
    logits -= logits.max(axis=1, keepdims=True)
    expz = np.exp(logits)
    probs = expz / expz.sum(axis=1, keepdims=True)
    ce = -np.mean(np.sum(Y * np.log(np.clip(probs, 1e-300, None)), axis=1))
    loss = float(ce + 0.5 * l2 * (np.sum(model.w1**2) + np.sum(model.w2**2)))
    dlogits = (probs - Y) / n
    gw2 = hidden.T @ dlogits + l2 * model.w2
    gb2 = dlogits.sum(axis=0)
    dhidden = dlogits @ model.w2.T * (1.0 - hidden**2)
    gw1 = X.T @ dhidden + l2 * model.w1
    gb1 = dhidden.sum(axis=0)
    return loss, (gw1, gb1, gw2, gb2)


def fit_mlp(X: np.ndarray, labels: np.ndarray, params: MLPParams | None = None) -> MLPModel:
    """Mini-batch gradient descent on cross-entropy; deterministic under seed.

    Unlike the batch learners, the fit depends on row order: the seeded
    shuffle assigns rows to mini-batches by position.
    """
    params = params or MLPParams()
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n, d = X.shape
    n_classes = int(labels.max()) + 1 if labels.size else 3
    n_classes = max(n_classes, 3)
    Y = np.zeros((n, n_classes))
    Y[np.arange(n), labels] = 1.0
    rng = rng_for(params.seed, "mlp-init")
    model = MLPModel(
        w1=rng.normal(0.0, 1.0 / np.sqrt(d), size=(d, params.hidden)),
        b1=np.zeros(params.hidden),
        w2=rng.normal(0.0, 1.0 / np.sqrt(params.hidden), size=(params.hidden, n_classes)),
        b2=np.zeros(n_classes),
    )
    shuffler = rng_for(params.seed, "mlp-batches")
    for _ in range(params.epochs):
        perm = shuffler.permutation(n)
        for start in range(0, n, params.batch):
            batch = perm[start : start + params.batch]
            loss, (gw1, gb1, gw2, gb2) = mlp_loss_grad(model, X[batch], Y[batch], params.l2)
            if not np.isfinite(loss):
                raise LearnerError("MLP loss became non-finite; reduce the learning rate")
            model.w1 -= params.lr * gw1
            model.b1 -= params.lr * gb1
            model.w2 -= params.lr * gw2
            model.b2 -= params.lr * gb2
    return model


# ---------------------------------------------------------------------------
# Binary learner configuration shared by the ordinal stage


@dataclass(frozen=True)
class LearnerConfig:
    kind: str = "gbt"  # "gbt" | "logistic"
    gbt: GBTParams = field(default_factory=GBTParams)
    logistic_l2: float = 1e-4
    logistic_epochs: int = 2000
    logistic_lr: float = 0.5

    def __post_init__(self):
        if self.kind not in ("gbt", "logistic"):
            raise LearnerError(f"unknown learner kind: {self.kind!r}")


def fit_binary(X: np.ndarray, y: np.ndarray, config: LearnerConfig):
    if config.kind == "logistic":
        return fit_logistic(
            X, y, l2=config.logistic_l2, epochs=config.logistic_epochs, lr=config.logistic_lr
        )
    return fit_gbt(X, y, config.gbt)


def predict_prob(model, X: np.ndarray) -> np.ndarray:
    """Probability output of any fitted learner (binary or 3-class MLP)."""
    return model.predict_prob(X)
