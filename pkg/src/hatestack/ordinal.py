"""Ordinal three-class classification from two binary models.

One binary model separates clean from not-clean, the other hate from
not-hate; their probabilities are differenced into a severity
distribution:

    p(clean)     = 1 - p(not clean)
    p(offensive) = p(not clean) - p(hate)
    p(hate)      = p(hate)

The middle term can go negative because the two models are independent;
it is clamped to zero and the triple renormalized. Predictions whose
maximum probability falls below the abstention threshold (default 1/3,
the inverse of the class count) are flagged as indecisive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import SeverityLabel
from .learners import LearnerConfig, fit_binary


class OrdinalError(Exception):
    pass


DEFAULT_ABSTAIN_THRESHOLD = 1.0 / 3.0


@dataclass(frozen=True)
class SeverityDistribution:
    p_clean: float
    p_offensive: float
    p_hate: float
    abstained: bool = False

    def as_array(self) -> np.ndarray:
        return np.array([self.p_clean, self.p_offensive, self.p_hate])


@dataclass
class OrdinalClassifier:
    clf_not_clean: object  # positive class: label > CLEAN
    clf_hate: object  # positive class: label == HATE
    abstain_threshold: float = DEFAULT_ABSTAIN_THRESHOLD


def combine_prob_arrays(p_not_clean: np.ndarray, p_hate: np.ndarray) -> np.ndarray:
    """Vectorized combiner; returns an (n, 3) simplex matrix."""
    p_not_clean = np.asarray(p_not_clean, dtype=np.float64)
    p_hate = np.asarray(p_hate, dtype=np.float64)
    if np.any((p_not_clean < 0) | (p_not_clean > 1)) or np.any((p_hate < 0) | (p_hate > 1)):
        raise OrdinalError("binary probabilities must lie in [0, 1]")
    clean = 1.0 - p_not_clean
    offensive = p_not_clean - p_hate
    hate = p_hate.copy()
    negative = offensive < 0
    if np.any(negative):
        offensive = np.where(negative, 0.0, offensive)
        norm = clean + offensive + hate
        clean = np.where(negative, clean / norm, clean)
        hate = np.where(negative, hate / norm, hate)
    return np.column_stack([clean, offensive, hate])


def combine_probs(p_not_clean: float, p_hate: float) -> SeverityDistribution:
    """Combine the two binary outputs for a single message."""
    row = combine_prob_arrays(np.array([p_not_clean]), np.array([p_hate]))[0]
    return SeverityDistribution(float(row[0]), float(row[1]), float(row[2]))


def binary_targets(labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(not-clean indicator, hate indicator) targets for the two models."""
    labels = np.asarray(labels, dtype=np.int64)
    return (labels >= int(SeverityLabel.OFFENSIVE)).astype(np.float64), (
        labels == int(SeverityLabel.HATE)
    ).astype(np.float64)


def fit_ordinal(
    X: np.ndarray,
    labels: np.ndarray,
    learner_config: LearnerConfig | None = None,
    abstain_threshold: float = DEFAULT_ABSTAIN_THRESHOLD,
) -> OrdinalClassifier:
    """Fit both binary models on the same feature matrix."""
    labels = np.asarray(labels, dtype=np.int64)
    present = set(labels.tolist())
    missing = [l.token for l in SeverityLabel if int(l) not in present]
    if missing:
        raise OrdinalError(f"missing classes in training labels: {', '.join(missing)}")
    config = learner_config or LearnerConfig()
    y_not_clean, y_hate = binary_targets(labels)
    return OrdinalClassifier(
        clf_not_clean=fit_binary(X, y_not_clean, config),
        clf_hate=fit_binary(X, y_hate, config),
        abstain_threshold=abstain_threshold,
    )


def predict_distributions(oc: OrdinalClassifier, X: np.ndarray) -> np.ndarray:
    """(n, 3) severity distributions for a feature matrix."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return combine_prob_arrays(oc.clf_not_clean.predict_prob(X), oc.clf_hate.predict_prob(X))


def label_from_distribution(dist: np.ndarray, abstain_threshold: float) -> tuple[SeverityLabel, bool]:
    """Argmax label (ties break toward the less severe class) plus the
    abstention flag: strict `max < threshold`."""
    idx = int(np.argmax(dist))
    return SeverityLabel(idx), bool(np.max(dist) < abstain_threshold)


def predict_ordinal(oc: OrdinalClassifier, x: np.ndarray) -> tuple[SeverityDistribution, SeverityLabel]:
    """Distribution plus predicted label for a single feature vector."""
    dist = predict_distributions(oc, x)[0]
    label, abstained = label_from_distribution(dist, oc.abstain_threshold)
    return (
        SeverityDistribution(float(dist[0]), float(dist[1]), float(dist[2]), abstained=abstained),
        label,
    )
