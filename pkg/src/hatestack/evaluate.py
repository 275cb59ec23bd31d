"""Evaluation: confusion matrices, classification metrics, one-vs-rest
ROC-AUC, ordinal error analysis, cross-platform grids, and intercoder
agreement (percent agreement, Cohen's kappa, ordinal Krippendorff alpha).

Abstentions are handled in one of two modes: "as_error" keeps them in the
denominator (hurting accuracy and recall) without assigning a predicted
column; "excluded" drops them from the denominators entirely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .corpus import LABELS, SeverityLabel


class EvalError(Exception):
    pass


ABSTAIN_MODES = ("as_error", "excluded")


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # (3, 3): rows true, columns predicted, clean/offensive/hate
    abstained_by_class: np.ndarray  # (3,) abstentions per true class
    abstain_mode: str = "as_error"

    @property
    def abstention_count(self) -> int:
        return int(self.abstained_by_class.sum())

    @property
    def total(self) -> int:
        """Messages in the denominator under the matrix's abstain mode."""
        n = int(self.counts.sum())
        if self.abstain_mode == "as_error":
            n += self.abstention_count
        return n


def confusion(
    preds: Sequence[Optional[SeverityLabel]],
    truth: Sequence[SeverityLabel],
    abstain_mode: str = "as_error",
) -> ConfusionMatrix:
    """Tally predictions against truth; None in `preds` marks an abstention."""
    if len(preds) != len(truth):
        raise EvalError(f"length mismatch: {len(preds)} predictions vs {len(truth)} truths")
    if abstain_mode not in ABSTAIN_MODES:
        raise EvalError(f"unknown abstain mode: {abstain_mode!r}")
    counts = np.zeros((3, 3), dtype=np.int64)
    abstained = np.zeros(3, dtype=np.int64)
    for p, t in zip(preds, truth):
        if p is None:
            abstained[int(t)] += 1
        else:
            counts[int(t), int(p)] += 1
    return ConfusionMatrix(counts=counts, abstained_by_class=abstained, abstain_mode=abstain_mode)


@dataclass
class EvalReport:
    accuracy: float
    accuracy_halfwidth: float  # 95% normal-approximation interval half-width
    precision: np.ndarray  # per class, clean/offensive/hate
    recall: np.ndarray
    f1: np.ndarray
    macro_f1: float
    clean_as_hate_rate: float
    hate_as_clean_rate: float
    minor_error_rate: float
    auc: np.ndarray | None = None  # per-class one-vs-rest; NaN where undefined
    zero_division_flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "accuracy": self.accuracy,
            "accuracy_halfwidth": self.accuracy_halfwidth,
            "macro_f1": self.macro_f1,
            "clean_as_hate_rate": self.clean_as_hate_rate,
            "hate_as_clean_rate": self.hate_as_clean_rate,
            "minor_error_rate": self.minor_error_rate,
            "zero_division_flags": list(self.zero_division_flags),
        }
        for i, label in enumerate(LABELS):
            out[f"{label.token}_precision"] = float(self.precision[i])
            out[f"{label.token}_recall"] = float(self.recall[i])
            out[f"{label.token}_f1"] = float(self.f1[i])
            if self.auc is not None:
                out[f"{label.token}_auc"] = float(self.auc[i])
        return out


def class_metrics(cm: ConfusionMatrix) -> EvalReport:
    """Precision/recall/F1 per class plus accuracy and ordinal error rates.

    Zero denominators yield 0.0 and are flagged rather than raising.
    """
    counts = cm.counts
    total = cm.total
    if total == 0:
        raise EvalError("empty confusion matrix")
    flags: list[str] = []
    diag = np.diag(counts).astype(np.float64)
    col = counts.sum(axis=0).astype(np.float64)
    row = counts.sum(axis=1).astype(np.float64)
    if cm.abstain_mode == "as_error":
        row = row + cm.abstained_by_class
    precision = np.zeros(3)
    recall = np.zeros(3)
    f1 = np.zeros(3)
    for i, label in enumerate(LABELS):
        if col[i] > 0:
            precision[i] = diag[i] / col[i]
        else:
            flags.append(f"{label.token}: no predictions")
        if row[i] > 0:
            recall[i] = diag[i] / row[i]
        else:
            flags.append(f"{label.token}: no true members")
        if precision[i] + recall[i] > 0:
            f1[i] = 2 * precision[i] * recall[i] / (precision[i] + recall[i])
    accuracy = float(diag.sum() / total)
    halfwidth = 1.96 * float(np.sqrt(max(accuracy * (1 - accuracy), 0.0) / total))
    err = ordinal_errors(cm)
    return EvalReport(
        accuracy=accuracy,
        accuracy_halfwidth=halfwidth,
        precision=precision,
        recall=recall,
        f1=f1,
        macro_f1=float(f1.mean()),
        clean_as_hate_rate=err["clean_as_hate_rate"],
        hate_as_clean_rate=err["hate_as_clean_rate"],
        minor_error_rate=err["minor_error_rate"],
        zero_division_flags=flags,
    )


def ordinal_errors(cm: ConfusionMatrix) -> dict[str, float]:
    """Major (clean<->hate) misclassification rates and the share of errors
    that are merely between adjacent classes."""
    counts = cm.counts.astype(np.float64)
    row = counts.sum(axis=1)
    clean_as_hate = counts[0, 2] / row[0] if row[0] > 0 else 0.0
    hate_as_clean = counts[2, 0] / row[2] if row[2] > 0 else 0.0
    off_diag = counts.sum() - np.trace(counts)
    adjacent = counts[0, 1] + counts[1, 0] + counts[1, 2] + counts[2, 1]
    minor = adjacent / off_diag if off_diag > 0 else 0.0
    return {
        "clean_as_hate_rate": float(clean_as_hate),
        "hate_as_clean_rate": float(hate_as_clean),
        "minor_error_rate": float(minor),
    }


def _midranks(scores: np.ndarray) -> np.ndarray:
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(scores.shape[0], dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < scores.shape[0]:
        j = i
        while j + 1 < scores.shape[0] and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # 1-based midrank
        i = j + 1
    return ranks


def roc_auc_ovr(probs: np.ndarray, truth: Sequence[SeverityLabel]) -> np.ndarray:
    """One-vs-rest AUC per class via the tie-aware rank statistic.

    Entries are NaN (undefined) when a class is absent from the truth or
    covers everything.
    """
    probs = np.asarray(probs, dtype=np.float64)
    y = np.array([int(t) for t in truth], dtype=np.int64)
    if probs.shape[0] != y.shape[0]:
        raise EvalError("probs and truth lengths differ")
    if np.any(probs < -1e-9) or np.any(np.abs(probs.sum(axis=1) - 1.0) > 1e-6):
        raise EvalError("probability rows must form a simplex")
    out = np.full(3, np.nan)
    for c in range(3):
        pos = y == c
        n_pos = int(pos.sum())
        n_neg = y.shape[0] - n_pos
        if n_pos == 0 or n_neg == 0:
            continue
        ranks = _midranks(probs[:, c])
        out[c] = (ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    return out


def evaluate_predictions(
    preds: Sequence[Optional[SeverityLabel]],
    truth: Sequence[SeverityLabel],
    probs: np.ndarray | None = None,
    abstain_mode: str = "as_error",
) -> EvalReport:
    """Full report from labels (and optionally probabilities, for AUC)."""
    report = class_metrics(confusion(preds, truth, abstain_mode))
    if probs is not None:
        report.auc = roc_auc_ovr(probs, truth)
    return report


@dataclass(frozen=True)
class GridCell:
    accuracy: float
    hate_precision: float
    hate_recall: float


def cross_platform_grid(
    models: Sequence,
    datasets: Mapping[str, object],
    resources,
    provider,
    abstain_mode: str = "as_error",
) -> dict[tuple[str, str], GridCell]:
    """Evaluate every model on every platform's test set.

    Cell (i, j) holds model i's accuracy and hate precision/recall on
    platform j's data; the diagonal is congruent performance. Models must
    expose `platform` and `predict_dataset(dataset, resources, provider)`.
    """
    grid: dict[tuple[str, str], GridCell] = {}
    for model in models:
        for platform, dataset in datasets.items():
            if len(dataset) == 0:
                raise EvalError(f"empty test set for platform {platform!r}")
            _, labels, abstained, kept = model.predict_dataset(dataset, resources, provider)
            truth = [dataset[i].label for i in kept]
            preds = [None if a else l for l, a in zip(labels, abstained)]
            report = class_metrics(confusion(preds, truth, abstain_mode))
            grid[(model.platform, platform)] = GridCell(
                accuracy=report.accuracy,
                hate_precision=float(report.precision[2]),
                hate_recall=float(report.recall[2]),
            )
    return grid


@dataclass(frozen=True)
class AgreementReport:
    percent_agreement: float
    cohen_kappa: float
    krippendorff_alpha_ordinal: float

    def to_dict(self) -> dict:
        return {
            "percent_agreement": self.percent_agreement,
            "cohen_kappa": self.cohen_kappa,
            "krippendorff_alpha_ordinal": self.krippendorff_alpha_ordinal,
        }


def agreement(a: Sequence, b: Sequence) -> AgreementReport:
    """Two-coder agreement over the same items.

    Kappa uses marginal-product chance agreement; alpha uses the standard
    two-coder coincidence matrix with the ordinal distance metric, where
    category distance is the between-marginal mass along the orderable
    scale.
    """
    if len(a) != len(b):
        raise EvalError("coder label lists must have equal length")
    n_items = len(a)
    if n_items == 0:
        raise EvalError("no items to compare")
    va = np.array([int(x) for x in a], dtype=np.int64)
    vb = np.array([int(x) for x in b], dtype=np.int64)
    categories = np.unique(np.concatenate([va, vb]))
    index = {int(c): i for i, c in enumerate(categories)}
    k = categories.shape[0]

    table = np.zeros((k, k), dtype=np.float64)
    for x, y in zip(va, vb):
        table[index[int(x)], index[int(y)]] += 1.0
    percent = float(np.trace(table) / n_items)

    p_o = percent
    p_e = float(np.sum(table.sum(axis=1) * table.sum(axis=0)) / n_items**2)
    kappa = 1.0 if p_o == 1.0 else (p_o - p_e) / (1.0 - p_e)

    # Coincidence matrix: each item contributes both orderings of its pair.
    coincidence = table + table.T
    n_c = coincidence.sum(axis=1)
    n_total = n_c.sum()  # = 2 * n_items
    if k == 1:
        alpha = 1.0
    else:
        # Ordinal squared distance between categories c < g.
        delta2 = np.zeros((k, k))
        for ci in range(k):
            for gi in range(ci + 1, k):
                span = n_c[ci : gi + 1].sum() - (n_c[ci] + n_c[gi]) / 2.0
                delta2[ci, gi] = span**2
        d_o = sum(
            coincidence[ci, gi] * delta2[ci, gi] for ci in range(k) for gi in range(ci + 1, k)
        )
        d_e = sum(
            n_c[ci] * n_c[gi] * delta2[ci, gi] for ci in range(k) for gi in range(ci + 1, k)
        ) / (n_total - 1.0)
        alpha = 1.0 if d_e == 0.0 else 1.0 - d_o / d_e
    return AgreementReport(
        percent_agreement=percent,
        cohen_kappa=float(kappa),
        krippendorff_alpha_ordinal=float(alpha),
    )
