"""The full cross-platform workflow: platform models, the stacked
superlearner, incongruent evaluation, and slotting in a new platform.

Run:  python3 demos/03_superlearner.py   (a few minutes)
"""

import numpy as np

from hatestack.config import RunConfig
from hatestack.corpus import Dataset, stratified_split
from hatestack.embeddings import HashedProvider
from hatestack.evaluate import cross_platform_grid
from hatestack.features import default_resources
from hatestack.stack import (
    add_platform_model,
    build_meta_training_rows,
    mlp_params_from,
    prepare_corpus,
    train_platform_model,
    train_superlearner,
)
from hatestack.synth import default_profiles, generate_corpus, reddit_profile

config = RunConfig(
    seed=11,
    k_folds=10,
    pls_components=20,
    embedding_provider="hashed:192",
    gbt_n_trees=60,
)
resources = default_resources()
provider = HashedProvider(192, seed=config.seed)

profiles = default_profiles()
corpus = generate_corpus(profiles, 1200, seed=19)

# --- Step 1: one ordinal pipeline per platform, keeping OOF predictions.
models, tests, prepared = [], {}, {}
for profile in profiles:
    ds = Dataset(tuple(m for m in corpus if m.platform == profile.platform))
    train, test = stratified_split(ds, config.train_frac, config.seed)
    model, _ = train_platform_model(train, config, resources, provider)
    models.append(model)
    tests[profile.platform] = test
    keep = set(model.oof_ids)
    prepared[profile.platform], _ = prepare_corpus(
        Dataset(tuple(m for m in train if m.id in keep)), resources, provider
    )
    print(f"trained {profile.platform}: {len(model.oof_ids)} training rows")

# --- Step 2: meta features = 3 probabilities per platform model + origin
#     platform (13 logical fields for four platforms). Origin triples come
#     from the out-of-fold store, never from a model that saw the row.
meta_rows = build_meta_training_rows(models, prepared)
print(f"\nmeta rows: {len(meta_rows)}, logical fields per row: {meta_rows[0][0].logical_field_count}")
print("own-row full predictions during assembly:",
      {m.platform: m.counters.own_row_full_predictions for m in models})

superlearner = train_superlearner(models, meta_rows, mlp_params_from(config), config.abstain_threshold)

# --- Pooled evaluation: the superlearner against each single-platform model.
pooled = Dataset(tuple(m for t in tests.values() for m in t))
pc, _ = prepare_corpus(pooled, resources, provider)
rows = np.arange(len(pc))


def pooled_accuracy(predict):
    labels = predict()
    return float((np.array([int(l) for l in labels]) == pc.labels).mean())


sl_acc = pooled_accuracy(lambda: superlearner.predict_prepared(pc, rows)[1])
print(f"\nsuperlearner pooled accuracy: {sl_acc:.3f}")
for model in models:
    acc = float((np.argmax(model.distributions_for_rows(pc, rows), axis=1) == pc.labels).mean())
    print(f"  {model.platform} model pooled accuracy: {acc:.3f}")

# --- Incongruent grid: every model against every platform's test set.
print("\ncross-platform hate recall (model x data):")
grid = cross_platform_grid(models, tests, resources, provider)
platforms = [m.platform for m in models]
print("            " + " ".join(f"{p:>11}" for p in platforms))
for mp in platforms:
    row = " ".join(f"{grid[(mp, dp)].hate_recall:>11.2f}" for dp in platforms)
    print(f"{mp:<11} {row}")

# --- Add a new platform trained on a small 60/40 corpus; base models are
#     untouched, only the meta stage refits.
new_corpus = generate_corpus((reddit_profile(),), 1000, seed=23)
new_train, new_test = stratified_split(new_corpus, 0.6, config.seed)
new_config = RunConfig(**{**config.__dict__, "train_frac": 0.6})
new_model, _ = train_platform_model(new_train, new_config, resources, provider)
keep = set(new_model.oof_ids)
prepared["reddit"], _ = prepare_corpus(
    Dataset(tuple(m for m in new_train if m.id in keep)), resources, provider
)
upgraded = add_platform_model(superlearner, new_model, prepared, mlp_params_from(config, "meta-v2"))
print(f"\nsuperlearner version {superlearner.version} -> {upgraded.version}; "
      f"meta width {superlearner.meta_input_width} -> {upgraded.meta_input_width}")

npc, _ = prepare_corpus(new_test, resources, provider)
nrows = np.arange(len(npc))
for name, sl in (("before", superlearner), ("after", upgraded)):
    labels = sl.predict_prepared(npc, nrows)[1]
    acc = float((np.array([int(l) for l in labels]) == npc.labels).mean())
    print(f"accuracy on the new platform's test set {name} the upgrade: {acc:.3f}")
