"""Run configuration: a flat key=value file with environment overrides.

Every pipeline knob lives here so a training run is reproducible from
(config, seed, data) alone. The config hash covers the knobs but not
filesystem paths, and is stable under key reordering.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path

from .util import sha256_text

ENV_PREFIX = "HATESTACK_"

# Fields excluded from the config hash: they locate inputs/outputs or steer
# execution rather than changing what the pipeline computes.
_HASH_EXCLUDED = ("embeddings_path", "lexicon_dir", "model_dir", "workers")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    seed: int = 0
    k_folds: int = 10
    train_frac: float = 0.8
    downsample_ratio: float = 2.0
    pls_components: int = 50
    abstain_threshold: float = 1.0 / 3.0
    embedding_provider: str = "hashed:256"  # "external" or "hashed:<dim>"
    embeddings_path: str = ""
    lexicon_dir: str = ""  # empty: packaged stand-in lexicons
    model_dir: str = ""
    learner: str = "gbt"  # "gbt" | "logistic"
    gbt_n_trees: int = 100
    gbt_max_depth: int = 3
    gbt_learning_rate: float = 0.1
    gbt_min_leaf: int = 5
    logistic_l2: float = 1e-4
    logistic_epochs: int = 2000
    logistic_lr: float = 0.5
    mlp_hidden: int = 32
    mlp_epochs: int = 300
    mlp_lr: float = 0.1
    mlp_l2: float = 1e-4
    mlp_batch: int = 32
    log_odds_prior_scale: float = 1.0
    workers: int = 1

    def validate(self) -> "RunConfig":
        if self.k_folds < 2:
            raise ConfigError("k_folds must be >= 2")
        if not 0.0 < self.train_frac <= 1.0:
            raise ConfigError("train_frac must be in (0, 1]")
        if self.downsample_ratio < 1.0:
            raise ConfigError("downsample_ratio must be >= 1")
        if self.pls_components < 1:
            raise ConfigError("pls_components must be >= 1")
        if not 0.0 <= self.abstain_threshold < 1.0:
            raise ConfigError("abstain_threshold must be in [0, 1)")
        if self.learner not in ("gbt", "logistic"):
            raise ConfigError(f"unknown learner: {self.learner!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        provider = self.embedding_provider
        if provider != "external":
            if not provider.startswith("hashed:"):
                raise ConfigError(f"unknown embedding provider: {provider!r}")
            try:
                dim = int(provider.split(":", 1)[1])
            except ValueError:
                raise ConfigError(f"bad hashed dimension in {provider!r}") from None
            if dim < 8:
                raise ConfigError("hashed embedding dimension must be >= 8")
        return self

    def hash(self) -> str:
        """Hash of the pipeline knobs, independent of key ordering and paths."""
        pairs = []
        for f in dataclasses.fields(self):
            if f.name in _HASH_EXCLUDED:
                continue
            pairs.append(f"{f.name}={getattr(self, f.name)!r}")
        return sha256_text("\n".join(sorted(pairs)))

    def to_file(self, path) -> None:
        lines = [
            f"{f.name} = {getattr(self, f.name)}"
            for f in dataclasses.fields(self)
        ]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None
    return raw


def load_config(path=None, env: dict | None = None) -> RunConfig:
    """Build a RunConfig from an optional key=value file plus environment
    overrides (HATESTACK_<KEY>). Unknown keys are errors."""
    values: dict = {}
    if path is not None:
        for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, val = line.split("=", 1)
            key = key.strip()
            if key not in _FIELD_TYPES:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _coerce(key, val)
    env = os.environ if env is None else env
    for key in _FIELD_TYPES:
        env_key = ENV_PREFIX + key.upper()
        if env_key in env:
            values[key] = _coerce(key, env[env_key])
    return RunConfig(**values).validate()
