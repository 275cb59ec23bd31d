"""Message embeddings and supervised PLS reduction.

Embeddings come either from an external file (the exporter's `#dim=` text
format) or from a deterministic signed feature hash of unigrams+bigrams,
which lets the whole pipeline run without a transformer. The PLS fit is
classic NIPALS PLS2 on the embedding block with a one-hot response.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class EmbeddingError(Exception):
    pass


class PLSError(Exception):
    """Numerical failure while fitting or applying the reduction."""


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    vectors: dict[str, np.ndarray]
    source: str = "external-file"


def load_embeddings(path) -> EmbeddingTable:
    """Parse the embedding file format: `#dim=<d>` header, then
    `<id><TAB><v1> <v2> ... <vd>` per line."""
    path = Path(path)
    vectors: dict[str, np.ndarray] = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("#dim="):
            raise EmbeddingError(f"{path}: missing #dim= header")
        try:
            dim = int(header[len("#dim=") :])
        except ValueError:
            raise EmbeddingError(f"{path}: bad dimension in header: {header!r}") from None
        if dim <= 0:
            raise EmbeddingError(f"{path}: dimension must be positive, got {dim}")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                msg_id, payload = line.rstrip("\n").split("\t", 1)
            except ValueError:
                raise EmbeddingError(f"{path}:{lineno}: record is not id<TAB>values") from None
            if msg_id in vectors:
                raise EmbeddingError(f"{path}:{lineno}: duplicate id {msg_id!r}")
            try:
                vec = np.array(payload.split(), dtype=np.float64)
            except ValueError:
                raise EmbeddingError(f"{path}:{lineno}: non-numeric component") from None
            if vec.shape[0] != dim:
                raise EmbeddingError(
                    f"{path}:{lineno}: id {msg_id!r} has {vec.shape[0]} values, expected {dim}"
                )
            if not np.all(np.isfinite(vec)):
                raise EmbeddingError(f"{path}:{lineno}: id {msg_id!r} has non-finite components")
            vectors[msg_id] = vec
    return EmbeddingTable(dim=dim, vectors=vectors)


def save_embeddings(table: EmbeddingTable, path) -> None:
    lines = [f"#dim={table.dim}"]
    for msg_id, vec in table.vectors.items():
        lines.append(msg_id + "\t" + " ".join(repr(float(v)) for v in vec))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def hashed_embedding(tokens: Sequence[str], dim: int, seed: int) -> np.ndarray:
    """Signed feature hashing of unigrams and bigrams, L2-normalized.

    Deterministic across processes: bucket and sign come from a keyed
    blake2b digest, not Python's randomized hash.
    """
    if dim < 8:
        raise EmbeddingError(f"hashed embedding dim must be >= 8, got {dim}")
    vec = np.zeros(dim, dtype=np.float64)
    if not tokens:
        return vec
    key = (int(seed) & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    grams = list(tokens) + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
    for gram in grams:
        digest = hashlib.blake2b(gram.encode("utf-8"), key=key, digest_size=9).digest()
        bucket = int.from_bytes(digest[:8], "little") % dim
        sign = 1.0 if digest[8] & 1 else -1.0
        vec[bucket] += sign
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


class HashedProvider:
    """Embedding provider backed by the hashing fallback."""

    source = "hashed-fallback"

    def __init__(self, dim: int, seed: int):
        if dim < 8:
            raise EmbeddingError(f"hashed embedding dim must be >= 8, got {dim}")
        self.dim = dim
        self.seed = seed

    def vector(self, msg_id: str, tokens: Sequence[str]) -> np.ndarray:
        return hashed_embedding(tokens, self.dim, self.seed)


class TableProvider:
    """Embedding provider backed by externally exported vectors."""

    source = "external-file"

    def __init__(self, table: EmbeddingTable):
        self.table = table
        self.dim = table.dim

    def vector(self, msg_id: str, tokens: Sequence[str]) -> np.ndarray:
        try:
            return self.table.vectors[msg_id]
        except KeyError:
            raise EmbeddingError(f"no embedding for message id {msg_id!r}") from None


@dataclass
class PLSModel:
    """Fitted NIPALS PLS2 reduction: x -> ((x-mean)/scale) @ rotation."""

    n_components: int
    weights: np.ndarray  # (d, k)
    loadings: np.ndarray  # (d, k)
    rotation: np.ndarray  # (d, k) = W (P^T W)^-1
    x_mean: np.ndarray
    x_scale: np.ndarray
    fitted_on: int
    training_scores: np.ndarray | None = field(default=None, repr=False)

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.x_mean.shape[0]:
            raise PLSError(
                f"input has {x.shape[-1]} features, model expects {self.x_mean.shape[0]}"
            )
        return ((x - self.x_mean) / self.x_scale) @ self.rotation


def fit_pls(X: np.ndarray, Y: np.ndarray, k: int, max_iter: int = 500, tol: float = 1e-10) -> PLSModel:
    """Fit k PLS components by NIPALS: each weight vector maximizes the
    covariance of the X score with the response scores, then X and Y are
    deflated by the extracted component.

    The inner power iteration follows the conventional NIPALS stopping
    rule: converged when the squared change of the (unit) weight vector
    falls below `tol`. The response-score iterate starts at the dominant
    direction of the residual cross-covariance (the loop's own fixed
    point, found exactly from a 3x3 eigenproblem), so convergence is
    certified within a couple of passes even when the remaining response
    directions are nearly degenerate and plain power iteration would
    wander. Raises PLSError naming the component if convergence still
    fails within `max_iter` iterations, or if a residual is too
    degenerate to continue.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    n, d = X.shape
    if Y.ndim == 1:
        Y = Y[:, None]
    if n <= k:
        raise PLSError(f"need more rows ({n}) than components ({k})")
    if d < k:
        raise PLSError(f"need at least as many features ({d}) as components ({k})")
    x_mean = X.mean(axis=0)
    x_scale = X.std(axis=0, ddof=1)
    x_scale[~np.isfinite(x_scale) | (x_scale == 0.0)] = 1.0
    Xd = (X - x_mean) / x_scale
    Yd = Y - Y.mean(axis=0)

    W = np.zeros((d, k))
    P = np.zeros((d, k))
    T = np.zeros((n, k))
    tiny = np.finfo(np.float64).tiny
    for a in range(k):
        cross = Xd.T @ Yd  # (d, 3)
        _, vectors = np.linalg.eigh(cross.T @ cross)
        u = Yd @ vectors[:, -1]  # response scores along the dominant direction
        if np.linalg.norm(u) < 1e-12:
            u = Yd[:, int(np.argmax(Yd.var(axis=0)))].copy()
        if np.linalg.norm(u) < 1e-12:
            raise PLSError(f"component {a + 1}: response residual is zero")
        converged = False
        w_prev = None
        for _ in range(max_iter):
            w = Xd.T @ u / max(u @ u, tiny)
            w_norm = np.linalg.norm(w)
            if w_norm < 1e-14:
                raise PLSError(f"component {a + 1}: predictor residual is zero")
            w /= w_norm
            t = Xd @ w
            tt = t @ t
            if tt < 1e-14:
                raise PLSError(f"component {a + 1}: score collapsed to zero")
            q = Yd.T @ t / tt
            u = Yd @ q / max(q @ q, tiny)
            if w_prev is not None:
                diff = w - w_prev
                if diff @ diff < tol:
                    converged = True
                    break
            w_prev = w
        if not converged:
            raise PLSError(f"component {a + 1}: no convergence in {max_iter} iterations")
        p = Xd.T @ t / tt
        W[:, a] = w
        P[:, a] = p
        T[:, a] = t
        Xd = Xd - np.outer(t, p)
        Yd = Yd - np.outer(t, q)
    rotation = W @ np.linalg.inv(P.T @ W)
    return PLSModel(
        n_components=k,
        weights=W,
        loadings=P,
        rotation=rotation,
        x_mean=x_mean,
        x_scale=x_scale,
        fitted_on=n,
        training_scores=T,
    )


def pls_transform(model: PLSModel, x: np.ndarray) -> np.ndarray:
    return model.transform(x)


def one_hot_labels(labels: np.ndarray, n_classes: int = 3) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.shape[0], n_classes), dtype=np.float64)
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out
