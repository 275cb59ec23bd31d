"""Evaluation utilities: confusion matrices, ordinal error analysis,
one-vs-rest ROC-AUC, and intercoder agreement statistics.

Run:  python3 demos/04_evaluation_and_agreement.py
"""

import numpy as np

from hatestack.corpus import SeverityLabel
from hatestack.evaluate import agreement, confusion, evaluate_predictions, ordinal_errors

C, O, H = SeverityLabel.CLEAN, SeverityLabel.OFFENSIVE, SeverityLabel.HATE

# --- A small prediction run with one abstention.
truth = [C, C, C, C, O, O, O, H, H, H]
preds = [C, C, C, O, O, O, H, H, H, None]  # last one abstained
probs = np.array(
    [
        [0.9, 0.08, 0.02],
        [0.8, 0.15, 0.05],
        [0.7, 0.2, 0.1],
        [0.4, 0.5, 0.1],
        [0.2, 0.7, 0.1],
        [0.3, 0.6, 0.1],
        [0.1, 0.4, 0.5],
        [0.05, 0.15, 0.8],
        [0.1, 0.2, 0.7],
        [0.34, 0.33, 0.33],
    ]
)

report = evaluate_predictions(preds, truth, probs, abstain_mode="as_error")
print("accuracy (abstention counted as error):", report.accuracy)
print("hate P/R/F1:", report.precision[2], report.recall[2], round(report.f1[2], 3))
print("per-class AUC:", np.round(report.auc, 3))

excluded = evaluate_predictions(preds, truth, probs, abstain_mode="excluded")
print("accuracy (abstentions excluded):", round(excluded.accuracy, 3))

# --- Ordinal error structure: major errors (clean<->hate) vs minor ones.
cm = confusion(preds, truth, "as_error")
print("\nconfusion counts (rows=true, cols=predicted):")
print(cm.counts)
print("ordinal errors:", ordinal_errors(cm))

# --- Intercoder agreement: ordinal alpha rewards near-miss disagreements.
coder_a = [C, C, C, C, O, O, O, O, H, H, H, H]
coder_b = [C, C, C, O, O, O, O, H, H, H, H, H]  # disagreements all adjacent
stats = agreement(coder_a, coder_b)
print("\npercent agreement:", round(stats.percent_agreement, 3))
print("cohen kappa:", round(stats.cohen_kappa, 3))
print("ordinal krippendorff alpha:", round(stats.krippendorff_alpha_ordinal, 3))
