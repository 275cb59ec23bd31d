"""Per-platform pipelines and the cross-platform superlearner.

A platform model is the full fitted chain (log-odds model, PLS reduction,
standardizer, two-binary ordinal classifier) plus out-of-fold predictions
for its own training rows. The superlearner's meta features combine one
probability triple per platform model with the message's origin platform;
for training rows, the origin platform's triple is read from the stored
out-of-fold predictions and never recomputed by a model that saw the row.
Prediction counters on every platform model make that auditable.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .config import RunConfig
from .corpus import Dataset, LabeledMessage, SeverityLabel, stratified_kfold
from .corpus import downsample_indices
from .embeddings import PLSModel, fit_pls, one_hot_labels
from .evaluate import class_metrics, confusion
from .features import (
    LogOddsModel,
    Resources,
    extract_base_features,
    fit_weighted_log_odds,
    log_odds_features,
    plural_nouns,
)
from .learners import (
    GBTParams,
    LearnerConfig,
    MLPParams,
    Standardizer,
    fit_mlp,
    fit_standardizer,
)
from .ordinal import (
    OrdinalClassifier,
    SeverityDistribution,
    fit_ordinal,
    label_from_distribution,
    predict_distributions,
)
from .preprocess import PreprocessError, clean_text, is_viable
from .util import rng_for


class StackError(Exception):
    pass


def learner_config_from(config: RunConfig) -> LearnerConfig:
    return LearnerConfig(
        kind=config.learner,
        gbt=GBTParams(
            n_trees=config.gbt_n_trees,
            max_depth=config.gbt_max_depth,
            learning_rate=config.gbt_learning_rate,
            min_leaf=config.gbt_min_leaf,
        ),
        logistic_l2=config.logistic_l2,
        logistic_epochs=config.logistic_epochs,
        logistic_lr=config.logistic_lr,
    )


def mlp_params_from(config: RunConfig, seed_tag: str = "meta") -> MLPParams:
    return MLPParams(
        hidden=config.mlp_hidden,
        epochs=config.mlp_epochs,
        lr=config.mlp_lr,
        l2=config.mlp_l2,
        batch=config.mlp_batch,
        seed=int(rng_for(config.seed, seed_tag).integers(2**31)),
    )


# ---------------------------------------------------------------------------
# Prepared corpora: everything per-message that does not depend on a fold


@dataclass
class PreparedCorpus:
    ids: list[str]
    platforms: list[str]
    labels: np.ndarray  # int64; -1 where unlabeled
    base: np.ndarray  # (n, 13) non-log-odds features
    nouns: list[list[str]]
    embeddings: np.ndarray  # (n, dim)
    kept_rows: list[int]  # indices into the source dataset

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def index_of(self) -> dict[str, int]:
        return {m: i for i, m in enumerate(self.ids)}


def prepare_corpus(
    dataset: Dataset, resources: Resources, provider
) -> tuple[PreparedCorpus, list[tuple[str, str]]]:
    """Clean, featurize, and embed every viable message once.

    Returns the prepared corpus plus (id, reason) pairs for messages that
    were skipped as non-viable.
    """
    ids: list[str] = []
    platforms: list[str] = []
    labels: list[int] = []
    base_rows: list[np.ndarray] = []
    nouns: list[list[str]] = []
    vectors: list[np.ndarray] = []
    kept_rows: list[int] = []
    skipped: list[tuple[str, str]] = []
    for i, msg in enumerate(dataset):
        if not is_viable(msg.raw_text):
            skipped.append((msg.id, "not viable: too short or no text"))
            continue
        try:
            cm = clean_text(msg)
        except PreprocessError:
            skipped.append((msg.id, "no tokens survive cleaning"))
            continue
        ids.append(msg.id)
        platforms.append(msg.platform)
        labels.append(int(msg.label) if msg.label is not None else -1)
        base_rows.append(extract_base_features(cm, resources))
        nouns.append(
            plural_nouns(
                cm.tokens,
                irregular=resources.plural_irregular,
                exceptions=resources.plural_exceptions,
            )
        )
        vectors.append(np.asarray(provider.vector(msg.id, cm.tokens), dtype=np.float64))
        kept_rows.append(i)
    if not ids:
        raise StackError("no viable messages in dataset")
    return (
        PreparedCorpus(
            ids=ids,
            platforms=platforms,
            labels=np.array(labels, dtype=np.int64),
            base=np.stack(base_rows),
            nouns=nouns,
            embeddings=np.stack(vectors),
            kept_rows=kept_rows,
        ),
        skipped,
    )


# ---------------------------------------------------------------------------
# One fitted pipeline (used per fold and for the final model)


@dataclass
class FittedPipeline:
    log_odds: LogOddsModel
    pls: PLSModel
    standardizer: Standardizer
    ordinal: OrdinalClassifier

    def design_matrix(self, pc: PreparedCorpus, rows: np.ndarray) -> np.ndarray:
        lo = np.stack([log_odds_features(pc.nouns[r], self.log_odds) for r in rows])
        scores = self.pls.transform(pc.embeddings[rows])
        return self.standardizer.transform(np.hstack([pc.base[rows], lo, scores]))

    def distributions(self, pc: PreparedCorpus, rows: np.ndarray) -> np.ndarray:
        return predict_distributions(self.ordinal, self.design_matrix(pc, rows))


def fit_pipeline(pc: PreparedCorpus, rows: np.ndarray, config: RunConfig) -> FittedPipeline:
    labels = pc.labels[rows]
    log_odds = fit_weighted_log_odds(
        [(pc.nouns[r], labels[i]) for i, r in enumerate(rows)],
        prior_scale=config.log_odds_prior_scale,
    )
    emb = pc.embeddings[rows]
    k = min(config.pls_components, emb.shape[1], emb.shape[0] - 1)
    pls = fit_pls(emb, one_hot_labels(labels), k)
    lo = np.stack([log_odds_features(pc.nouns[r], log_odds) for r in rows])
    raw = np.hstack([pc.base[rows], lo, pls.training_scores])
    standardizer = fit_standardizer(raw)
    ordinal = fit_ordinal(
        standardizer.transform(raw),
        labels,
        learner_config_from(config),
        abstain_threshold=config.abstain_threshold,
    )
    return FittedPipeline(log_odds=log_odds, pls=pls, standardizer=standardizer, ordinal=ordinal)


# ---------------------------------------------------------------------------
# Platform model


@dataclass
class PredictionCounters:
    """Instrumentation for the anti-leakage audit."""

    full_predictions: int = 0
    own_row_full_predictions: int = 0

    def reset(self) -> None:
        self.full_predictions = 0
        self.own_row_full_predictions = 0


@dataclass
class PlatformModel:
    platform: str
    log_odds: LogOddsModel
    pls: PLSModel
    standardizer: Standardizer
    ordinal: OrdinalClassifier
    oof_ids: tuple[str, ...]
    oof: np.ndarray  # (len(oof_ids), 3), clamp-renormalized simplexes
    training_ids: frozenset[str]
    config_snapshot: dict
    counters: PredictionCounters = field(default_factory=PredictionCounters, repr=False)

    @property
    def pipeline(self) -> FittedPipeline:
        return FittedPipeline(
            log_odds=self.log_odds,
            pls=self.pls,
            standardizer=self.standardizer,
            ordinal=self.ordinal,
        )

    @property
    def oof_map(self) -> dict[str, np.ndarray]:
        return {m: self.oof[i] for i, m in enumerate(self.oof_ids)}

    def distributions_for_rows(self, pc: PreparedCorpus, rows: np.ndarray) -> np.ndarray:
        """Full-model predictions; counts how many rows were the model's own
        training rows so meta training can be audited for leakage."""
        rows = np.asarray(rows, dtype=np.int64)
        self.counters.full_predictions += int(rows.shape[0])
        self.counters.own_row_full_predictions += sum(
            1 for r in rows if pc.ids[r] in self.training_ids
        )
        return self.pipeline.distributions(pc, rows)

    def predict_dataset(self, dataset: Dataset, resources: Resources, provider):
        """(distributions, labels, abstained, kept_dataset_rows) for the
        viable messages of a dataset."""
        pc, _skipped = prepare_corpus(dataset, resources, provider)
        dists = self.distributions_for_rows(pc, np.arange(len(pc)))
        labels = []
        abstained = []
        for row in dists:
            label, flag = label_from_distribution(row, self.ordinal.abstain_threshold)
            labels.append(label)
            abstained.append(flag)
        return dists, labels, abstained, pc.kept_rows


def _fit_fold(args) -> tuple[int, np.ndarray, dict]:
    """Fit one cross-validation fold; module-level so worker processes can run it."""
    fold_i, pc, fit_rows, val_rows, config = args
    pipeline = fit_pipeline(pc, fit_rows, config)
    dists = pipeline.distributions(pc, val_rows)
    preds = []
    abst = []
    for row in dists:
        label, flag = label_from_distribution(row, config.abstain_threshold)
        preds.append(None if flag else label)
        abst.append(flag)
    truth = [SeverityLabel(int(l)) for l in pc.labels[val_rows]]
    report = class_metrics(confusion(preds, truth, "as_error"))
    metrics = {
        "fold": fold_i,
        "n_fit": int(fit_rows.shape[0]),
        "n_val": int(val_rows.shape[0]),
        "accuracy": report.accuracy,
        "hate_f1": float(report.f1[2]),
    }
    return fold_i, dists, metrics


def train_platform_model(
    dataset: Dataset, config: RunConfig, resources: Resources, provider
) -> tuple[PlatformModel, list[dict]]:
    """Train the full per-platform pipeline.

    Every fold downsamples its own training rows, fits the whole chain on
    them alone, and records predictions for the fold's validation rows;
    those become the model's out-of-fold predictions. The final pipeline
    is then fitted on the full (downsampled) training set.
    """
    platforms = {m.platform for m in dataset}
    if len(platforms) != 1:
        raise StackError(f"expected a single-platform dataset, got {sorted(platforms)}")
    platform = platforms.pop()
    pc, skipped = prepare_corpus(dataset, resources, provider)
    if skipped:
        warnings.warn(f"{platform}: skipped {len(skipped)} non-viable messages", stacklevel=2)
    if np.any(pc.labels < 0):
        raise StackError("training dataset contains unlabeled messages")
    present = set(pc.labels.tolist())
    if present != {0, 1, 2}:
        missing = [l.token for l in SeverityLabel if int(l) not in present]
        raise StackError(f"{platform}: missing classes: {', '.join(missing)}")

    kept_ds = dataset.subset(pc.kept_rows)
    folds = None
    for attempt in range(3):
        candidate = stratified_kfold(kept_ds, config.k_folds, rng_seed(config.seed, platform, attempt))
        if all(set(pc.labels[tr].tolist()) == {0, 1, 2} for tr, _ in candidate):
            folds = candidate
            break
    if folds is None:
        raise StackError(f"{platform}: could not build folds containing every class")

    tasks = []
    for fold_i, (tr, va) in enumerate(folds):
        rng = rng_for(config.seed, "downsample", platform, fold_i)
        sel = downsample_indices(pc.labels[tr], config.downsample_ratio, rng)
        tasks.append((fold_i, pc, tr[sel], va, config))

    oof = np.zeros((len(pc), 3))
    fold_metrics: list[dict] = []
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_fit_fold, tasks))
    else:
        results = [_fit_fold(t) for t in tasks]
    for fold_i, dists, metrics in sorted(results, key=lambda r: r[0]):
        oof[folds[fold_i][1]] = dists
        fold_metrics.append(metrics)

    rng = rng_for(config.seed, "downsample", platform, "final")
    final_rows = downsample_indices(pc.labels, config.downsample_ratio, rng)
    pipeline = fit_pipeline(pc, final_rows, config)
    model = PlatformModel(
        platform=platform,
        log_odds=pipeline.log_odds,
        pls=pipeline.pls,
        standardizer=pipeline.standardizer,
        ordinal=pipeline.ordinal,
        oof_ids=tuple(pc.ids),
        oof=oof,
        training_ids=frozenset(pc.ids),
        config_snapshot={"config_hash": config.hash(), "k_folds": config.k_folds},
    )
    return model, fold_metrics


def rng_seed(seed: int, *tags) -> int:
    return int(rng_for(seed, "fold-seed", *tags).integers(2**31))


# ---------------------------------------------------------------------------
# Meta features and the superlearner


@dataclass(frozen=True)
class MetaFeatures:
    """One probability triple per platform model plus the origin platform."""

    triples: tuple[tuple[str, tuple[float, float, float]], ...]
    origin_platform: str

    @property
    def logical_field_count(self) -> int:
        return 3 * len(self.triples) + 1

    def encode(self, platform_order: Sequence[str]) -> np.ndarray:
        """Numeric meta input: 3P probabilities plus a P-wide one-hot of the
        origin. Unregistered origins encode as the all-zero "other" row."""
        by_platform = dict(self.triples)
        probs = np.concatenate([np.asarray(by_platform[p]) for p in platform_order])
        onehot = np.zeros(len(platform_order))
        if self.origin_platform in platform_order:
            onehot[list(platform_order).index(self.origin_platform)] = 1.0
        return np.concatenate([probs, onehot])


def assemble_meta_features(
    msg_id: str,
    origin_platform: str,
    pc: PreparedCorpus,
    row: int,
    models: Sequence[PlatformModel],
    mode: str = "inference",
) -> MetaFeatures:
    """Meta features for one message.

    In training mode the origin platform's triple comes from its stored
    out-of-fold prediction (missing entries are a fatal leakage guard);
    every other platform's triple is its final model's prediction. In
    inference mode all triples come from final models.
    """
    if mode not in ("training", "inference"):
        raise StackError(f"unknown meta mode: {mode!r}")
    triples = []
    for model in models:
        if mode == "training" and model.platform == origin_platform:
            entry = model.oof_map.get(msg_id)
            if entry is None:
                raise StackError(
                    f"leakage guard: {msg_id!r} has no out-of-fold prediction "
                    f"for platform {origin_platform!r}"
                )
            triple = tuple(float(v) for v in entry)
        else:
            dist = model.distributions_for_rows(pc, np.array([row]))[0]
            triple = (float(dist[0]), float(dist[1]), float(dist[2]))
        triples.append((model.platform, triple))
    return MetaFeatures(triples=tuple(triples), origin_platform=origin_platform)


def build_meta_training_rows(
    models: Sequence[PlatformModel],
    prepared: Mapping[str, PreparedCorpus],
) -> list[tuple[MetaFeatures, SeverityLabel]]:
    """Training-mode meta rows for every training row of every platform model.

    Origin triples are copied bit-for-bit from each model's out-of-fold
    store; cross-platform triples are batch full-model predictions.
    """
    rows_out: list[tuple[MetaFeatures, SeverityLabel]] = []
    for origin in models:
        pc = prepared.get(origin.platform)
        if pc is None:
            raise StackError(f"no training corpus supplied for platform {origin.platform!r}")
        index = pc.index_of
        try:
            rows = np.array([index[m] for m in origin.oof_ids], dtype=np.int64)
        except KeyError as exc:
            raise StackError(
                f"leakage guard: training corpus for {origin.platform!r} "
                f"is missing message {exc.args[0]!r}"
            ) from None
        blocks: list[np.ndarray] = []
        for model in models:
            if model.platform == origin.platform:
                blocks.append(origin.oof)
            else:
                blocks.append(model.distributions_for_rows(pc, rows))
        labels = pc.labels[rows]
        for i, msg_id in enumerate(origin.oof_ids):
            triples = tuple(
                (model.platform, (float(b[i, 0]), float(b[i, 1]), float(b[i, 2])))
                for model, b in zip(models, blocks)
            )
            rows_out.append(
                (
                    MetaFeatures(triples=triples, origin_platform=origin.platform),
                    SeverityLabel(int(labels[i])),
                )
            )
    return rows_out


@dataclass
class SuperLearner:
    base: tuple[PlatformModel, ...]
    meta: object  # MLPModel
    abstain_threshold: float
    version: int = 1

    @property
    def platforms(self) -> tuple[str, ...]:
        return tuple(m.platform for m in self.base)

    @property
    def meta_input_width(self) -> int:
        return 4 * len(self.base)

    def _predict_encoded(self, X_meta: np.ndarray):
        dists = self.meta.predict_prob(X_meta)
        labels = []
        abstained = []
        for row in dists:
            label, flag = label_from_distribution(row, self.abstain_threshold)
            labels.append(label)
            abstained.append(flag)
        return dists, labels, abstained

    def predict_prepared(self, pc: PreparedCorpus, rows: np.ndarray):
        rows = np.asarray(rows, dtype=np.int64)
        blocks = [model.distributions_for_rows(pc, rows) for model in self.base]
        order = self.platforms
        onehot = np.zeros((rows.shape[0], len(order)))
        for i, r in enumerate(rows):
            origin = pc.platforms[r]
            if origin in order:
                onehot[i, order.index(origin)] = 1.0
        X_meta = np.hstack(blocks + [onehot])
        return self._predict_encoded(X_meta)

    def predict_dataset(self, dataset: Dataset, resources: Resources, provider):
        pc, _skipped = prepare_corpus(dataset, resources, provider)
        dists, labels, abstained = self.predict_prepared(pc, np.arange(len(pc)))
        return dists, labels, abstained, pc.kept_rows

    def predict_message(
        self, msg: LabeledMessage, resources: Resources, provider
    ) -> tuple[SeverityDistribution, SeverityLabel]:
        if not is_viable(msg.raw_text):
            raise StackError(f"message {msg.id!r} is not viable")
        dataset = Dataset((msg,))
        dists, labels, abstained, _ = self.predict_dataset(dataset, resources, provider)
        d = dists[0]
        return (
            SeverityDistribution(float(d[0]), float(d[1]), float(d[2]), abstained=abstained[0]),
            labels[0],
        )


def train_superlearner(
    models: Sequence[PlatformModel],
    meta_rows: Sequence[tuple[MetaFeatures, SeverityLabel]],
    params: MLPParams,
    abstain_threshold: float = 1.0 / 3.0,
) -> SuperLearner:
    """Fit the meta-MLP on training-mode meta rows."""
    if not meta_rows:
        raise StackError("no meta training rows")
    if len(models) < 2:
        raise StackError("stacking needs at least 2 platform models")
    order = tuple(m.platform for m in models)
    X = np.stack([mf.encode(order) for mf, _ in meta_rows])
    y = np.array([int(label) for _, label in meta_rows], dtype=np.int64)
    meta = fit_mlp(X, y, params)
    return SuperLearner(
        base=tuple(models), meta=meta, abstain_threshold=abstain_threshold, version=1
    )


def add_platform_model(
    sl: SuperLearner,
    new_model: PlatformModel,
    prepared: Mapping[str, PreparedCorpus],
    params: MLPParams,
) -> SuperLearner:
    """Slot a new platform model in: base models untouched, meta refitted
    over the supplied corpora, version incremented."""
    if new_model.platform in sl.platforms:
        raise StackError(f"platform {new_model.platform!r} is already registered")
    models = sl.base + (new_model,)
    meta_rows = build_meta_training_rows(models, prepared)
    order = tuple(m.platform for m in models)
    X = np.stack([mf.encode(order) for mf, _ in meta_rows])
    y = np.array([int(label) for _, label in meta_rows], dtype=np.int64)
    meta = fit_mlp(X, y, params)
    return SuperLearner(
        base=models,
        meta=meta,
        abstain_threshold=sl.abstain_threshold,
        version=sl.version + 1,
    )


# ---------------------------------------------------------------------------
# Hyperparameter grid search (reproducible stand-in for the unstated tuning)

DEFAULT_GBT_GRID = tuple(
    GBTParams(n_trees=t, max_depth=d, learning_rate=lr)
    for d in (2, 3, 4)
    for t in (50, 100, 200)
    for lr in (0.05, 0.1, 0.3)
)


def tune_gbt_params(
    X: np.ndarray,
    labels: np.ndarray,
    grid: Sequence[GBTParams] = DEFAULT_GBT_GRID,
    k: int = 3,
    seed: int = 0,
) -> GBTParams:
    """Pick GBT hyperparameters by mean inner-fold F1 on the hate class.

    Ties keep the earliest grid entry, so the choice is deterministic.
    """
    from .corpus import stratified_kfold_indices

    labels = np.asarray(labels, dtype=np.int64)
    folds = stratified_kfold_indices(labels, k, seed)
    best: tuple[float, int] | None = None
    best_params = grid[0]
    for gi, params in enumerate(grid):
        scores = []
        for tr, va in folds:
            oc = fit_ordinal(X[tr], labels[tr], LearnerConfig(kind="gbt", gbt=params))
            dists = predict_distributions(oc, X[va])
            preds = [label_from_distribution(row, 0.0)[0] for row in dists]
            truth = [SeverityLabel(int(l)) for l in labels[va]]
            report = class_metrics(confusion(preds, truth, "as_error"))
            scores.append(float(report.f1[2]))
        mean_f1 = float(np.mean(scores))
        if best is None or mean_f1 > best[0]:
            best = (mean_f1, gi)
            best_params = params
    return best_params
