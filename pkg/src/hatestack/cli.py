"""Command-line front end for the full workflow.

Commands: prep, synth, train-platform, train-stack, predict, eval,
add-platform, agreement. Exit codes: 0 success, 1 usage error, 2 data/IO
error, 3 numerical failure. All outputs are written atomically and are
byte-identical across reruns with the same config and seed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .archive import (
    ArchiveError,
    load_platform_model,
    load_superlearner,
    read_manifest,
    save_platform_model,
    save_superlearner,
    tree_digests,
)
from .config import ConfigError, RunConfig, load_config
from .corpus import Dataset, DatasetError, SeverityLabel, load_dataset, stratified_split
from .embeddings import EmbeddingError, HashedProvider, PLSError, TableProvider, load_embeddings
from .evaluate import (
    EvalError,
    agreement,
    class_metrics,
    confusion,
    cross_platform_grid,
    evaluate_predictions,
)
from .features import FeatureError, default_resources, load_resources
from .learners import LearnerError
from .ordinal import OrdinalError
from .preprocess import PreprocessError, clean_text, is_viable
from .stack import (
    StackError,
    add_platform_model,
    build_meta_training_rows,
    mlp_params_from,
    prepare_corpus,
    train_platform_model,
    train_superlearner,
)
from .synth import PlatformProfile, SynthError, default_profiles, generate_corpus, profile_to_dict
from .util import atomic_write_text

log = logging.getLogger("hatestack")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

_DATA_ERRORS = (
    DatasetError,
    PreprocessError,
    FeatureError,
    EmbeddingError,
    ArchiveError,
    StackError,
    EvalError,
    SynthError,
    OrdinalError,
    OSError,
)
_NUMERIC_ERRORS = (PLSError, LearnerError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--workers", type=int, help="worker processes for fold fitting")
    common.add_argument("--verbose", action="store_true", help="chatty logging")

    parser = _Parser(prog="hatestack", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prep", parents=[common], help="clean a JSONL corpus, streaming")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--format", default="jsonl", choices=("jsonl", "csv"))

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic labeled corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n", type=int, default=1000, help="messages per platform")
    p.add_argument("--profiles", help="JSON file of profile dicts (default: built-in four)")

    p = sub.add_parser("train-platform", parents=[common], help="train one platform model")
    p.add_argument("--data", required=True, help="single-platform JSONL dataset")
    p.add_argument("--format", default="jsonl", choices=("jsonl", "csv"))
    p.add_argument("--out", required=True, help="archive directory to write")

    p = sub.add_parser("train-stack", parents=[common], help="train the superlearner")
    p.add_argument("--archives", nargs="+", required=True, help="platform model archives")
    p.add_argument("--data", nargs="+", required=True, help="training datasets (JSONL)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("predict", parents=[common], help="predict with a superlearner archive")
    p.add_argument("--archive", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--embeddings", help="embedding file (external provider only)")

    p = sub.add_parser("eval", parents=[common], help="score predictions against truth")
    p.add_argument("--predictions")
    p.add_argument("--truth")
    p.add_argument("--abstain-mode", default="as_error", choices=("as_error", "excluded"))
    p.add_argument("--json-out", help="also write the report JSON to this path")
    p.add_argument("--grid", action="store_true", help="cross-platform grid mode")
    p.add_argument("--archives", nargs="*", help="platform archives (grid mode)")
    p.add_argument("--data", nargs="*", help="per-platform test datasets (grid mode)")

    p = sub.add_parser("add-platform", parents=[common], help="slot a new platform model in")
    p.add_argument("--archive", required=True, help="existing superlearner archive")
    p.add_argument("--new-archive", required=True, help="new platform model archive")
    p.add_argument("--data", nargs="+", required=True, help="meta training datasets, all platforms")
    p.add_argument("--out", required=True)

    p = sub.add_parser("agreement", parents=[common], help="intercoder agreement statistics")
    p.add_argument("--a", dest="coder_a", required=True, help="JSONL labels from coder A")
    p.add_argument("--b", dest="coder_b", required=True, help="JSONL labels from coder B")
    return parser


def _load_run_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else load_config(None)
    if args.seed is not None:
        config.seed = args.seed
    if args.workers is not None:
        config.workers = args.workers
    return config.validate()


def _resources(config: RunConfig):
    return load_resources(config.lexicon_dir) if config.lexicon_dir else default_resources()


def _provider_for_training(config: RunConfig):
    if config.embedding_provider == "external":
        if not config.embeddings_path:
            raise UsageError("external embedding provider needs embeddings_path in the config")
        provider = TableProvider(load_embeddings(config.embeddings_path))
        spec = {"provider": "external", "dim": provider.dim, "seed": None}
    else:
        dim = int(config.embedding_provider.split(":", 1)[1])
        provider = HashedProvider(dim, seed=config.seed)
        spec = {"provider": "hashed", "dim": dim, "seed": config.seed}
    return provider, spec


def _provider_from_spec(spec: dict, embeddings_path: str | None):
    if not spec:
        raise ArchiveError("archive manifest is missing its embedding spec")
    if spec["provider"] == "external":
        if not embeddings_path:
            raise UsageError("this archive needs an external embedding file (--embeddings)")
        return TableProvider(load_embeddings(embeddings_path))
    return HashedProvider(int(spec["dim"]), seed=int(spec["seed"]))


def _print(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


def _report_table(rows: list[tuple[str, object]]) -> str:
    header = (
        f"{'model':<22} {'acc%':>6} {'+/-':>5} "
        f"{'cln P':>6} {'cln R':>6} {'cln F1':>6} "
        f"{'off P':>6} {'off R':>6} {'off F1':>6} "
        f"{'hate P':>6} {'hate R':>6} {'hate F1':>7}"
    )
    lines = [header]
    for name, r in rows:
        lines.append(
            f"{name:<22} {100 * r.accuracy:>6.1f} {100 * r.accuracy_halfwidth:>5.1f} "
            f"{r.precision[0]:>6.2f} {r.recall[0]:>6.2f} {r.f1[0]:>6.2f} "
            f"{r.precision[1]:>6.2f} {r.recall[1]:>6.2f} {r.f1[1]:>6.2f} "
            f"{r.precision[2]:>6.2f} {r.recall[2]:>6.2f} {r.f1[2]:>7.2f}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Commands


def cmd_prep(args, config: RunConfig) -> int:
    dataset = load_dataset(args.input, args.format)
    lines = []
    for msg in dataset:
        if not is_viable(msg.raw_text):
            lines.append(json.dumps({"id": msg.id, "skipped": "not viable"}, sort_keys=True))
            continue
        try:
            cm = clean_text(msg)
        except PreprocessError:
            lines.append(json.dumps({"id": msg.id, "skipped": "no tokens"}, sort_keys=True))
            continue
        record = {
            "id": cm.id,
            "platform": msg.platform,
            "tokens": list(cm.tokens),
            "sentence_count": cm.sentence_count,
            "punct_count": cm.punct_count,
            "hashtag_count": cm.hashtag_count,
            "char_count_original": cm.char_count_original,
        }
        if msg.label is not None:
            record["label"] = msg.label.token
        lines.append(json.dumps(record, sort_keys=True))
    atomic_write_text(args.output, "\n".join(lines) + "\n")
    _print({"input": args.input, "output": args.output, "records": len(lines)})
    return EXIT_OK


def cmd_synth(args, config: RunConfig) -> int:
    if args.profiles:
        raw = json.loads(Path(args.profiles).read_text(encoding="utf-8"))
        profiles = tuple(
            PlatformProfile(
                platform=d["platform"],
                class_mix=tuple(d["class_mix"]),
                marker_vocab=tuple(d["marker_vocab"]),
                slur_vocab=tuple(d["slur_vocab"]),
                coded_vocab=tuple(d["coded_vocab"]),
                length_range=tuple(d.get("length_range", (8, 26))),
                hashtag_rate=d.get("hashtag_rate", 0.05),
                hate_signal_prob=d.get("hate_signal_prob", 0.9),
            )
            for d in raw
        )
    else:
        profiles = default_profiles()
    corpus = generate_corpus(profiles, args.n, config.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    counts = {}
    for profile in profiles:
        messages = [m for m in corpus if m.platform == profile.platform]
        lines = [
            json.dumps(
                {"id": m.id, "platform": m.platform, "text": m.raw_text, "label": m.label.token},
                sort_keys=True,
            )
            for m in messages
        ]
        atomic_write_text(out_dir / f"{profile.platform}.jsonl", "\n".join(lines) + "\n")
        counts[profile.platform] = len(messages)
    manifest = {
        "seed": config.seed,
        "n_per_platform": args.n,
        "profiles": [profile_to_dict(p) for p in profiles],
        "counts": counts,
    }
    atomic_write_text(out_dir / "manifest.json", json.dumps(manifest, sort_keys=True) + "\n")
    _print({"out_dir": str(out_dir), "platforms": sorted(counts), "n_per_platform": args.n})
    return EXIT_OK


def cmd_train_platform(args, config: RunConfig) -> int:
    dataset = load_dataset(args.data, args.format)
    resources = _resources(config)
    provider, spec = _provider_for_training(config)
    if config.train_frac < 1.0:
        train, test = stratified_split(dataset, config.train_frac, config.seed)
    else:
        train, test = dataset, Dataset(())
    model, fold_metrics = train_platform_model(train, config, resources, provider)
    save_platform_model(
        model, args.out, lexicon_digest=resources.digest(), embedding_spec=spec
    )
    _print(
        {
            "platform": model.platform,
            "archive": str(args.out),
            "n_train": len(train),
            "n_test": len(test),
            "config_hash": config.hash(),
            "folds": fold_metrics,
        }
    )
    return EXIT_OK


def _group_by_platform(paths: list[str]) -> dict[str, Dataset]:
    messages: dict[str, list] = {}
    for path in paths:
        for msg in load_dataset(path):
            messages.setdefault(msg.platform, []).append(msg)
    return {platform: Dataset(tuple(msgs)) for platform, msgs in messages.items()}


def _prepare_training_rows(models, datasets, resources, provider):
    """Prepared corpora restricted to each model's training (OOF) rows."""
    prepared = {}
    for model in models:
        data = datasets.get(model.platform)
        if data is None:
            raise StackError(f"no dataset supplied for platform {model.platform!r}")
        wanted = set(model.oof_ids)
        subset = Dataset(tuple(m for m in data if m.id in wanted))
        pc, _ = prepare_corpus(subset, resources, provider)
        prepared[model.platform] = pc
    return prepared


def cmd_train_stack(args, config: RunConfig) -> int:
    if len(args.archives) < 2:
        raise UsageError("stacking needs at least 2 platform archives")
    models = []
    spec = None
    for path in args.archives:
        manifest = read_manifest(path)
        if spec is None:
            spec = manifest.get("embedding", {})
        elif manifest.get("embedding", {}) != spec:
            raise ArchiveError(f"{path}: embedding spec differs from the other archives")
        models.append(load_platform_model(path))
    resources = _resources(config)
    provider = _provider_from_spec(spec, config.embeddings_path or None)
    datasets = _group_by_platform(args.data)
    prepared = _prepare_training_rows(models, datasets, resources, provider)
    meta_rows = build_meta_training_rows(models, prepared)
    sl = train_superlearner(
        models, meta_rows, mlp_params_from(config), abstain_threshold=config.abstain_threshold
    )
    base_dirs = {m.platform: Path(p) for m, p in zip(models, args.archives)}
    save_superlearner(
        sl,
        args.out,
        config_hash=config.hash(),
        embedding_spec=spec,
        lexicon_digest=resources.digest(),
        base_source_dirs=base_dirs,
    )
    order = sl.platforms
    X = np.stack([mf.encode(order) for mf, _ in meta_rows])
    truth = [label for _, label in meta_rows]
    dists = sl.meta.predict_prob(X)
    preds = [SeverityLabel(int(np.argmax(row))) for row in dists]
    report = class_metrics(confusion(preds, truth, "as_error"))
    _print(
        {
            "archive": str(args.out),
            "platforms": list(order),
            "version": sl.version,
            "meta_rows": len(meta_rows),
            "meta_training_accuracy": report.accuracy,
            "config_hash": config.hash(),
        }
    )
    return EXIT_OK


def cmd_predict(args, config: RunConfig) -> int:
    sl, manifest = load_superlearner(args.archive)
    provider = _provider_from_spec(
        manifest.get("embedding", {}), args.embeddings or config.embeddings_path or None
    )
    resources = _resources(config)
    dataset = load_dataset(args.input)
    pc, skipped = prepare_corpus(dataset, resources, provider)
    dists, labels, abstained = sl.predict_prepared(pc, np.arange(len(pc)))
    by_id = {
        pc.ids[i]: {
            "id": pc.ids[i],
            "p_clean": float(dists[i, 0]),
            "p_offensive": float(dists[i, 1]),
            "p_hate": float(dists[i, 2]),
            "label": labels[i].token,
            "abstained": bool(abstained[i]),
        }
        for i in range(len(pc))
    }
    for msg_id, reason in skipped:
        by_id[msg_id] = {"id": msg_id, "skipped": reason}
    lines = [json.dumps(by_id[m.id], sort_keys=True) for m in dataset]
    atomic_write_text(args.output, "\n".join(lines) + "\n")
    _print({"input": args.input, "output": args.output, "predicted": len(pc), "skipped": len(skipped)})
    return EXIT_OK


def _load_predictions(path):
    records = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from None
            records[rec["id"]] = rec
    if not records:
        raise DatasetError(f"{path}: no prediction records")
    return records


def cmd_eval(args, config: RunConfig) -> int:
    if args.grid:
        if not args.archives or not args.data:
            raise UsageError("grid mode needs --archives and --data")
        models = [load_platform_model(p) for p in args.archives]
        spec = read_manifest(args.archives[0]).get("embedding", {})
        provider = _provider_from_spec(spec, config.embeddings_path or None)
        resources = _resources(config)
        datasets = _group_by_platform(args.data)
        grid = cross_platform_grid(models, datasets, resources, provider, args.abstain_mode)
        payload = {
            f"{mp}|{dp}": {
                "accuracy": cell.accuracy,
                "hate_precision": cell.hate_precision,
                "hate_recall": cell.hate_recall,
            }
            for (mp, dp), cell in grid.items()
        }
        header = "model \\ data " + " ".join(f"{p:>12}" for p in sorted(datasets))
        print(header)
        for mp in sorted({m.platform for m in models}):
            row = " ".join(f"{grid[(mp, dp)].accuracy * 100:>11.1f}%" for dp in sorted(datasets))
            print(f"{mp:<13} {row}")
        _print(payload)
        if args.json_out:
            atomic_write_text(args.json_out, json.dumps(payload, sort_keys=True) + "\n")
        return EXIT_OK
    if not args.predictions or not args.truth:
        raise UsageError("eval needs --predictions and --truth (or --grid mode)")
    preds_by_id = _load_predictions(args.predictions)
    truth_ds = load_dataset(args.truth)
    preds = []
    truth = []
    probs = []
    for msg in truth_ds:
        if msg.label is None:
            raise DatasetError(f"truth message {msg.id!r} is unlabeled")
        rec = preds_by_id.get(msg.id)
        if rec is None:
            raise EvalError(f"no prediction for id {msg.id!r}")
        truth.append(msg.label)
        if "skipped" in rec or rec.get("abstained"):
            preds.append(None)
            probs.append([1 / 3, 1 / 3, 1 / 3])
        else:
            preds.append(SeverityLabel.from_token(rec["label"]))
            probs.append([rec["p_clean"], rec["p_offensive"], rec["p_hate"]])
    report = evaluate_predictions(preds, truth, np.array(probs), args.abstain_mode)
    print(_report_table([("predictions", report)]))
    payload = report.to_dict()
    _print(payload)
    if args.json_out:
        atomic_write_text(args.json_out, json.dumps(payload, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_add_platform(args, config: RunConfig) -> int:
    sl, manifest = load_superlearner(args.archive)
    new_model = load_platform_model(args.new_archive)
    new_manifest = read_manifest(args.new_archive)
    if new_manifest.get("embedding", {}) != manifest.get("embedding", {}):
        raise ArchiveError("new platform archive was trained with a different embedding spec")
    resources = _resources(config)
    provider = _provider_from_spec(manifest.get("embedding", {}), config.embeddings_path or None)
    datasets = _group_by_platform(args.data)
    models = list(sl.base) + [new_model]
    prepared = _prepare_training_rows(models, datasets, resources, provider)
    sl2 = add_platform_model(sl, new_model, prepared, mlp_params_from(config, "meta-v2"))
    base_dirs = {p: Path(args.archive) / "base" / p for p in sl.platforms}
    base_dirs[new_model.platform] = Path(args.new_archive)
    save_superlearner(
        sl2,
        args.out,
        config_hash=manifest.get("config_hash", ""),
        embedding_spec=manifest.get("embedding", {}),
        lexicon_digest=manifest.get("lexicon_digest", ""),
        base_source_dirs=base_dirs,
    )
    _print(
        {
            "archive": str(args.out),
            "platforms": list(sl2.platforms),
            "version": sl2.version,
            "base_digests_unchanged": _base_digests_unchanged(args.archive, args.out, sl.platforms),
        }
    )
    return EXIT_OK


def _base_digests_unchanged(old_dir, new_dir, platforms) -> bool:
    for platform in platforms:
        old = tree_digests(Path(old_dir) / "base" / platform)
        new = tree_digests(Path(new_dir) / "base" / platform)
        if old != new:
            return False
    return True


def cmd_agreement(args, config: RunConfig) -> int:
    a = load_dataset(args.coder_a)
    b_by_id = {m.id: m for m in load_dataset(args.coder_b)}
    labels_a = []
    labels_b = []
    for msg in a:
        other = b_by_id.get(msg.id)
        if other is None:
            raise EvalError(f"coder B has no label for id {msg.id!r}")
        if msg.label is None or other.label is None:
            raise DatasetError(f"unlabeled message {msg.id!r}")
        labels_a.append(msg.label)
        labels_b.append(other.label)
    report = agreement(labels_a, labels_b)
    _print(report.to_dict())
    return EXIT_OK


_COMMANDS = {
    "prep": cmd_prep,
    "synth": cmd_synth,
    "train-platform": cmd_train_platform,
    "train-stack": cmd_train_stack,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "add-platform": cmd_add_platform,
    "agreement": cmd_agreement,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
        config = _load_run_config(args)
        return _COMMANDS[args.command](args, config)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entrypoint() -> None:
    sys.exit(main())
