"""Train one platform-specific ordinal classifier end to end.

The pipeline per fold: downsample to 2:1, fit the log-odds model, reduce
hashed embeddings with supervised PLS, standardize, then train the two
binary gradient-boosted models combined by the ordinal rule. Out-of-fold
predictions are kept for the stacking stage.

Run:  python3 demos/02_platform_model.py   (about half a minute)
"""

from hatestack.config import RunConfig
from hatestack.corpus import stratified_split
from hatestack.embeddings import HashedProvider
from hatestack.evaluate import class_metrics, confusion
from hatestack.features import default_resources
from hatestack.stack import train_platform_model
from hatestack.synth import default_profiles, generate_corpus

config = RunConfig(
    seed=7,
    k_folds=10,
    pls_components=20,
    embedding_provider="hashed:192",
    gbt_n_trees=60,
)
resources = default_resources()
provider = HashedProvider(192, seed=config.seed)

profile = default_profiles()[0]  # facebook-like class mix (0.70/0.12/0.18)
corpus = generate_corpus((profile,), 1500, seed=3)
print("class counts:", {k.token: v for k, v in corpus.class_counts.items()})

train, test = stratified_split(corpus, config.train_frac, config.seed)
model, fold_metrics = train_platform_model(train, config, resources, provider)

print("\nper-fold validation metrics:")
for fm in fold_metrics:
    print(f"  fold {fm['fold']}: accuracy={fm['accuracy']:.3f} hate_f1={fm['hate_f1']:.3f}")

print(f"\nout-of-fold predictions stored for {len(model.oof_ids)} training rows")

dists, labels, abstained, kept = model.predict_dataset(test, resources, provider)
truth = [test[i].label for i in kept]
preds = [None if a else l for l, a in zip(labels, abstained)]
report = class_metrics(confusion(preds, truth, "as_error"))
print(f"held-out accuracy: {report.accuracy:.3f} ± {report.accuracy_halfwidth:.3f}")
print(f"hate precision/recall/F1: {report.precision[2]:.2f} / {report.recall[2]:.2f} / {report.f1[2]:.2f}")
print(f"major errors: clean->hate {report.clean_as_hate_rate:.3%}, hate->clean {report.hate_as_clean_rate:.3%}")
print(f"share of errors between adjacent classes: {report.minor_error_rate:.2%}")
