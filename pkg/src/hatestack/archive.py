"""On-disk archives for platform models and superlearners.

A platform-model archive is a directory of canonical-JSON envelopes plus a
manifest; a superlearner archive nests one platform archive per base model
under base/ next to the meta model and its own manifest. Writing the same
fitted model twice produces byte-identical trees, which the determinism
contract ("same config + seed => same bytes") depends on.

Manifests record the embedding provider spec ({"provider", "dim", "seed"})
so prediction rebuilds exactly the vectors the model was trained on.
"""

from __future__ import annotations

import json
import shutil
from pathlib import Path

from .ordinal import OrdinalClassifier
from .serialize import (
    decode_array,
    dumps_envelope,
    encode_array,
    loads_envelope,
    model_from_envelope,
    model_to_envelope,
)
from .stack import PlatformModel, SuperLearner
from .util import atomic_write_text, sha256_file

ARCHIVE_FORMAT = 1


class ArchiveError(Exception):
    pass


def _write_json(path: Path, payload: dict) -> None:
    atomic_write_text(path, json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n")


def _read_json(path: Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ArchiveError(f"missing archive file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ArchiveError(f"corrupt archive file {path}: {exc.msg}") from None


def _ordinal_envelope(oc: OrdinalClassifier) -> dict:
    return {
        "kind": "ordinal",
        "version": 1,
        "params": {
            "abstain_threshold": oc.abstain_threshold,
            "not_clean": model_to_envelope(oc.clf_not_clean),
            "hate": model_to_envelope(oc.clf_hate),
        },
        "arrays": {},
    }


def _ordinal_from_envelope(env: dict) -> OrdinalClassifier:
    params = env["params"]
    return OrdinalClassifier(
        clf_not_clean=model_from_envelope(params["not_clean"]),
        clf_hate=model_from_envelope(params["hate"]),
        abstain_threshold=float(params["abstain_threshold"]),
    )


def save_platform_model(
    model: PlatformModel,
    directory,
    *,
    lexicon_digest: str = "",
    embedding_spec: dict | None = None,
) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    atomic_write_text(
        directory / "standardizer.json", dumps_envelope(model_to_envelope(model.standardizer))
    )
    atomic_write_text(directory / "pls.json", dumps_envelope(model_to_envelope(model.pls)))
    atomic_write_text(
        directory / "log_odds.json", dumps_envelope(model_to_envelope(model.log_odds))
    )
    atomic_write_text(directory / "ordinal.json", dumps_envelope(_ordinal_envelope(model.ordinal)))
    _write_json(
        directory / "oof.json",
        {
            "ids": list(model.oof_ids),
            "distributions": encode_array(model.oof),
            "training_ids": sorted(model.training_ids),
        },
    )
    _write_json(
        directory / "manifest.json",
        {
            "format": ARCHIVE_FORMAT,
            "kind": "platform_model",
            "platform": model.platform,
            "config_snapshot": model.config_snapshot,
            "lexicon_digest": lexicon_digest,
            "embedding": embedding_spec or {},
        },
    )


def read_manifest(directory) -> dict:
    return _read_json(Path(directory) / "manifest.json")


def load_platform_model(directory) -> PlatformModel:
    directory = Path(directory)
    manifest = read_manifest(directory)
    if manifest.get("kind") != "platform_model":
        raise ArchiveError(f"{directory} is not a platform-model archive")
    if manifest.get("format") != ARCHIVE_FORMAT:
        raise ArchiveError(f"{directory}: unsupported archive format {manifest.get('format')!r}")
    oof = _read_json(directory / "oof.json")
    return PlatformModel(
        platform=manifest["platform"],
        standardizer=model_from_envelope(
            loads_envelope((directory / "standardizer.json").read_text())
        ),
        pls=model_from_envelope(loads_envelope((directory / "pls.json").read_text())),
        log_odds=model_from_envelope(loads_envelope((directory / "log_odds.json").read_text())),
        ordinal=_ordinal_from_envelope(_read_json(directory / "ordinal.json")),
        oof_ids=tuple(oof["ids"]),
        oof=decode_array(oof["distributions"]),
        training_ids=frozenset(oof["training_ids"]),
        config_snapshot=manifest.get("config_snapshot", {}),
    )


def save_superlearner(
    sl: SuperLearner,
    directory,
    *,
    config_hash: str = "",
    embedding_spec: dict | None = None,
    lexicon_digest: str = "",
    base_source_dirs: dict | None = None,
) -> None:
    """Write a superlearner archive.

    When `base_source_dirs` maps a platform to an existing platform-model
    archive, its files are copied verbatim, keeping base-model bytes
    identical across superlearner versions.
    """
    directory = Path(directory)
    base_dir = directory / "base"
    base_dir.mkdir(parents=True, exist_ok=True)
    for model in sl.base:
        target = base_dir / model.platform
        source = (base_source_dirs or {}).get(model.platform)
        if source is not None:
            if target.exists():
                shutil.rmtree(target)
            shutil.copytree(source, target)
        else:
            save_platform_model(
                model, target, lexicon_digest=lexicon_digest, embedding_spec=embedding_spec
            )
    atomic_write_text(directory / "meta.json", dumps_envelope(model_to_envelope(sl.meta)))
    _write_json(
        directory / "manifest.json",
        {
            "format": ARCHIVE_FORMAT,
            "kind": "superlearner",
            "version": sl.version,
            "platforms": list(sl.platforms),
            "abstain_threshold": sl.abstain_threshold,
            "config_hash": config_hash,
            "embedding": embedding_spec or {},
            "lexicon_digest": lexicon_digest,
        },
    )


def load_superlearner(directory) -> tuple[SuperLearner, dict]:
    directory = Path(directory)
    manifest = read_manifest(directory)
    if manifest.get("kind") != "superlearner":
        raise ArchiveError(f"{directory} is not a superlearner archive")
    if manifest.get("format") != ARCHIVE_FORMAT:
        raise ArchiveError(f"{directory}: unsupported archive format {manifest.get('format')!r}")
    models = tuple(
        load_platform_model(directory / "base" / platform) for platform in manifest["platforms"]
    )
    meta = model_from_envelope(loads_envelope((directory / "meta.json").read_text()))
    sl = SuperLearner(
        base=models,
        meta=meta,
        abstain_threshold=float(manifest["abstain_threshold"]),
        version=int(manifest["version"]),
    )
    return sl, manifest


def tree_digests(directory) -> dict[str, str]:
    """Relative path -> sha256 for every file under an archive directory."""
    directory = Path(directory)
    return {
        str(p.relative_to(directory)): sha256_file(p)
        for p in sorted(directory.rglob("*"))
        if p.is_file()
    }
