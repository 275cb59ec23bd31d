"""Cross-platform hate/offensive/clean text classification.

Per-platform pipelines (dictionary + syntactic features, weighted
log-odds over plural nouns, PLS-reduced embeddings, a two-binary ordinal
classifier) are stacked under a superlearner whose meta features pair each
platform model's probabilities with the message's origin platform.
"""

from .corpus import (
    Dataset,
    DatasetError,
    LabeledMessage,
    SeverityLabel,
    downsample_majority,
    load_dataset,
    stratified_kfold,
    stratified_split,
)
from .ordinal import OrdinalClassifier, SeverityDistribution, combine_probs, fit_ordinal, predict_ordinal
from .stack import PlatformModel, SuperLearner, train_platform_model, train_superlearner

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DatasetError",
    "LabeledMessage",
    "SeverityLabel",
    "OrdinalClassifier",
    "SeverityDistribution",
    "PlatformModel",
    "SuperLearner",
    "combine_probs",
    "downsample_majority",
    "fit_ordinal",
    "load_dataset",
    "predict_ordinal",
    "stratified_kfold",
    "stratified_split",
    "train_platform_model",
    "train_superlearner",
    "__version__",
]
