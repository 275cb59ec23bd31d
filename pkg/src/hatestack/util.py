"""Small shared helpers: deterministic RNG derivation, atomic file writes, digests."""

from __future__ import annotations

import hashlib
import os
import tempfile
from pathlib import Path

import numpy as np


def stable_hash64(text: str) -> int:
    """64-bit hash of a string that is stable across processes and platforms."""
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def rng_for(seed: int, *tags) -> np.random.Generator:
    """Derive an independent generator from a master seed and a tag path.

    The same (seed, tags) always yields the same stream, so independent
    pipeline stages (folds, platforms, learners) can draw reproducibly
    without sharing generator state.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    entropy.extend(stable_hash64(str(t)) for t in tags)
    return np.random.default_rng(np.random.SeedSequence(entropy))


def atomic_write_text(path, text: str) -> None:
    """Write text to `path` via a temp file + rename so readers never see partial output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()
