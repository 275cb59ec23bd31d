"""Data model and dataset handling.

Messages carry an ordinal severity label (clean < offensive < hate) and a
platform tag. This module owns loading from JSONL/CSV, stratified
splitting and k-folding, and majority-class downsampling. All randomized
operations are pure functions of (input, seed).
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .util import rng_for


class DatasetError(Exception):
    """Raised for malformed input files or violated dataset preconditions."""


class SeverityLabel(IntEnum):
    """Message severity, totally ordered: CLEAN < OFFENSIVE < HATE."""

    CLEAN = 0
    OFFENSIVE = 1
    HATE = 2

    @classmethod
    def from_token(cls, token: str) -> "SeverityLabel":
        try:
            return cls[token.strip().upper()]
        except KeyError:
            raise DatasetError(f"unknown label token: {token!r}") from None

    @property
    def token(self) -> str:
        return self.name.lower()


LABELS = (SeverityLabel.CLEAN, SeverityLabel.OFFENSIVE, SeverityLabel.HATE)


@dataclass(frozen=True)
class LabeledMessage:
    """One social-media post. `label` is None for unlabeled inference inputs."""

    id: str
    platform: str
    raw_text: str
    label: SeverityLabel | None = None


@dataclass(frozen=True)
class Dataset:
    messages: tuple[LabeledMessage, ...]

    def __post_init__(self):
        seen: set[str] = set()
        for m in self.messages:
            if not m.id:
                raise DatasetError("message with empty id")
            if m.id in seen:
                raise DatasetError(f"duplicate message id: {m.id!r}")
            seen.add(m.id)
            if not m.raw_text:
                raise DatasetError(f"message {m.id!r} has empty text")

    def __len__(self) -> int:
        return len(self.messages)

    def __iter__(self) -> Iterator[LabeledMessage]:
        return iter(self.messages)

    def __getitem__(self, i: int) -> LabeledMessage:
        return self.messages[i]

    @property
    def class_counts(self) -> dict[SeverityLabel, int]:
        counts = {label: 0 for label in LABELS}
        for m in self.messages:
            if m.label is not None:
                counts[m.label] += 1
        return counts

    @property
    def platform_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for m in self.messages:
            counts[m.platform] = counts.get(m.platform, 0) + 1
        return counts

    def labels_array(self) -> np.ndarray:
        """Integer label per message; raises if any message is unlabeled."""
        out = np.empty(len(self.messages), dtype=np.int64)
        for i, m in enumerate(self.messages):
            if m.label is None:
                raise DatasetError(f"message {m.id!r} is unlabeled")
            out[i] = int(m.label)
        return out

    def subset(self, indices: Sequence[int]) -> "Dataset":
        return Dataset(tuple(self.messages[i] for i in indices))


def _message_from_record(record: dict, where: str) -> LabeledMessage:
    for key in ("id", "platform", "text"):
        if key not in record or record[key] in (None, ""):
            raise DatasetError(f"{where}: missing or empty field {key!r}")
    label = record.get("label")
    parsed = SeverityLabel.from_token(label) if label not in (None, "") else None
    return LabeledMessage(
        id=str(record["id"]),
        platform=str(record["platform"]),
        raw_text=str(record["text"]),
        label=parsed,
    )


def load_dataset(path, format: str = "jsonl") -> Dataset:
    """Load a dataset from a JSONL or CSV file.

    JSONL records: {"id": str, "platform": str, "text": str, "label": str?}.
    CSV: header id,platform,text,label with RFC-4180 quoting. Label tokens
    are case-insensitive "clean"/"offensive"/"hate"; anything else is an
    error naming the offending line.
    """
    path = Path(path)
    if format not in ("jsonl", "csv"):
        raise DatasetError(f"unknown dataset format: {format!r}")
    messages: list[LabeledMessage] = []
    if format == "jsonl":
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DatasetError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from None
                if not isinstance(record, dict):
                    raise DatasetError(f"{path}:{lineno}: record is not an object")
                try:
                    messages.append(_message_from_record(record, f"{path}:{lineno}"))
                except DatasetError as exc:
                    raise DatasetError(f"{path}:{lineno}: {exc}") from None
    else:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise DatasetError(f"{path}: empty file")
            required = {"id", "platform", "text"}
            if not required.issubset(set(reader.fieldnames)):
                raise DatasetError(f"{path}: header must include id,platform,text")
            for record in reader:
                where = f"{path}:{reader.line_num}"
                try:
                    messages.append(_message_from_record(record, where))
                except DatasetError as exc:
                    raise DatasetError(f"{where}: {exc}") from None
    if not messages:
        raise DatasetError(f"{path}: no records")
    return Dataset(tuple(messages))


def save_dataset(dataset: Dataset, path) -> None:
    """Write a dataset back out as JSONL (inverse of load_dataset)."""
    lines = []
    for m in dataset:
        record = {"id": m.id, "platform": m.platform, "text": m.raw_text}
        if m.label is not None:
            record["label"] = m.label.token
        lines.append(json.dumps(record, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _indices_by_class(labels: np.ndarray) -> dict[int, np.ndarray]:
    return {int(c): np.flatnonzero(labels == int(c)) for c in LABELS}


def stratified_split(dataset: Dataset, train_frac: float, seed: int) -> tuple[Dataset, Dataset]:
    """Split into train/test preserving class proportions.

    Per class, round(train_frac * count) messages go to train, rounding
    half up (ties resolved toward train). Classes with zero members only
    warn. Deterministic under `seed`.
    """
    if not 0.0 < train_frac <= 1.0:
        raise DatasetError(f"train_frac must be in (0, 1], got {train_frac}")
    labels = dataset.labels_array()
    rng = rng_for(seed, "stratified-split")
    train_idx: list[int] = []
    test_idx: list[int] = []
    for c, idx in _indices_by_class(labels).items():
        if len(idx) == 0:
            warnings.warn(f"class {SeverityLabel(c).token!r} has zero members", stacklevel=2)
            continue
        shuffled = idx.copy()
        rng.shuffle(shuffled)
        n_train = int(math.floor(train_frac * len(idx) + 0.5))
        train_idx.extend(shuffled[:n_train].tolist())
        test_idx.extend(shuffled[n_train:].tolist())
    return dataset.subset(sorted(train_idx)), dataset.subset(sorted(test_idx))


def stratified_kfold_indices(
    labels: np.ndarray, k: int, seed: int
) -> list[tuple[np.ndarray, np.ndarray]]:
    """k (train_indices, validation_indices) pairs stratified by class.

    Validation sets partition the index range; per-class sizes across folds
    differ by at most one. Raises if any class has fewer than k members.
    """
    if k < 2:
        raise DatasetError(f"k must be >= 2, got {k}")
    labels = np.asarray(labels, dtype=np.int64)
    rng = rng_for(seed, "stratified-kfold")
    fold_of = np.empty(len(labels), dtype=np.int64)
    for c, idx in _indices_by_class(labels).items():
        if 0 < len(idx) < k:
            raise DatasetError(
                f"class {SeverityLabel(c).token!r} has {len(idx)} members, fewer than k={k}"
            )
        shuffled = idx.copy()
        rng.shuffle(shuffled)
        offset = int(rng.integers(k))
        for j, row in enumerate(shuffled):
            fold_of[row] = (j + offset) % k
    folds = []
    everything = np.arange(len(labels))
    for f in range(k):
        val = everything[fold_of == f]
        train = everything[fold_of != f]
        folds.append((train, val))
    return folds


def stratified_kfold(dataset: Dataset, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Dataset-level wrapper around stratified_kfold_indices."""
    return stratified_kfold_indices(dataset.labels_array(), k, seed)


def downsample_indices(labels: np.ndarray, ratio: float, rng: np.random.Generator) -> np.ndarray:
    """Indices kept after capping each class at ceil(ratio * smallest class).

    Classes at or below the cap are untouched; larger ones are randomly
    reduced. Returned indices are sorted (original order preserved).
    """
    if ratio < 1.0:
        raise DatasetError(f"downsample ratio must be >= 1, got {ratio}")
    by_class = {c: idx for c, idx in _indices_by_class(labels).items() if len(idx) > 0}
    if not by_class:
        return np.arange(len(labels))
    m = min(len(idx) for idx in by_class.values())
    cap = int(math.ceil(ratio * m))
    kept: list[np.ndarray] = []
    for c in sorted(by_class):
        idx = by_class[c]
        if len(idx) > cap:
            idx = rng.choice(idx, size=cap, replace=False)
        kept.append(idx)
    return np.sort(np.concatenate(kept))


def downsample_majority(dataset: Dataset, ratio: float = 2.0, seed: int = 0) -> Dataset:
    """Cap majority classes at ceil(ratio * minority-class size)."""
    labels = dataset.labels_array()
    kept = downsample_indices(labels, ratio, rng_for(seed, "downsample"))
    return dataset.subset(kept.tolist())
