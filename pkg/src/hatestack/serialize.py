"""Versioned JSON envelopes for fitted models.

Envelope shape: {"kind", "version", "params", "arrays"} where each array
is {"dtype", "shape", "data"} with data base64-encoding the little-endian
bytes. Round-trips are bit-exact, which archive determinism relies on.
"""

from __future__ import annotations

import base64
import json

import numpy as np

from .embeddings import PLSModel
from .features import LogOddsModel
from .learners import GBTModel, LogisticModel, MLPModel, Standardizer, Tree


class SerializeError(Exception):
    pass


ENVELOPE_VERSION = 1

_DTYPES = {"f8": "<f8", "i8": "<i8"}


def encode_array(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a)
    if a.dtype == np.float64:
        tag = "f8"
    elif a.dtype == np.int64:
        tag = "i8"
    else:
        raise SerializeError(f"unsupported dtype: {a.dtype}")
    payload = a.astype(_DTYPES[tag], copy=False).tobytes()
    return {
        "dtype": tag,
        "shape": list(a.shape),
        "data": base64.b64encode(payload).decode("ascii"),
    }


def decode_array(d: dict) -> np.ndarray:
    if d.get("dtype") not in _DTYPES:
        raise SerializeError(f"unsupported dtype in envelope: {d.get('dtype')!r}")
    raw = base64.b64decode(d["data"])
    return np.frombuffer(raw, dtype=_DTYPES[d["dtype"]]).reshape(d["shape"]).copy()


def dumps_envelope(env: dict) -> str:
    """Canonical JSON text: sorted keys, compact separators, trailing newline."""
    return json.dumps(env, sort_keys=True, separators=(",", ":")) + "\n"


def loads_envelope(text: str) -> dict:
    env = json.loads(text)
    if not isinstance(env, dict) or "kind" not in env:
        raise SerializeError("not a model envelope")
    if env.get("version") != ENVELOPE_VERSION:
        raise SerializeError(f"unsupported envelope version: {env.get('version')!r}")
    return env


def _envelope(kind: str, params: dict, arrays: dict) -> dict:
    return {
        "kind": kind,
        "version": ENVELOPE_VERSION,
        "params": params,
        "arrays": {k: encode_array(v) for k, v in arrays.items()},
    }


def model_to_envelope(model) -> dict:
    if isinstance(model, Standardizer):
        return _envelope(
            "standardizer",
            {},
            {"kept_columns": model.kept_columns, "means": model.means, "scales": model.scales},
        )
    if isinstance(model, LogisticModel):
        return _envelope(
            "logistic",
            {},
            {"weights": model.weights, "bias": np.array([model.bias])},
        )
    if isinstance(model, GBTModel):
        offsets = [0]
        feature, threshold, left, right, value = [], [], [], [], []
        for tree in model.trees:
            feature.append(tree.feature)
            threshold.append(tree.threshold)
            left.append(tree.left)
            right.append(tree.right)
            value.append(tree.value)
            offsets.append(offsets[-1] + tree.feature.shape[0])
        empty_i = np.zeros(0, dtype=np.int64)
        empty_f = np.zeros(0, dtype=np.float64)
        return _envelope(
            "gbt",
            {"learning_rate": model.learning_rate, "base_score": model.base_score},
            {
                "offsets": np.array(offsets, dtype=np.int64),
                "feature": np.concatenate(feature) if feature else empty_i,
                "threshold": np.concatenate(threshold) if threshold else empty_f,
                "left": np.concatenate(left) if left else empty_i,
                "right": np.concatenate(right) if right else empty_i,
                "value": np.concatenate(value) if value else empty_f,
            },
        )
    if isinstance(model, MLPModel):
        return _envelope(
            "mlp", {}, {"w1": model.w1, "b1": model.b1, "w2": model.w2, "b2": model.b2}
        )
    if isinstance(model, PLSModel):
        return _envelope(
            "pls",
            {"n_components": model.n_components, "fitted_on": model.fitted_on},
            {
                "weights": model.weights,
                "loadings": model.loadings,
                "rotation": model.rotation,
                "x_mean": model.x_mean,
                "x_scale": model.x_scale,
            },
        )
    if isinstance(model, LogOddsModel):
        return _envelope(
            "log_odds",
            {"prior_scale": model.prior_scale, "vocab": list(model.vocab)},
            {"z": model.z},
        )
    raise SerializeError(f"cannot serialize {type(model).__name__}")


def model_from_envelope(env: dict):
    kind = env["kind"]
    arrays = {k: decode_array(v) for k, v in env.get("arrays", {}).items()}
    params = env.get("params", {})
    if kind == "standardizer":
        return Standardizer(
            kept_columns=arrays["kept_columns"], means=arrays["means"], scales=arrays["scales"]
        )
    if kind == "logistic":
        return LogisticModel(weights=arrays["weights"], bias=float(arrays["bias"][0]))
    if kind == "gbt":
        offsets = arrays["offsets"]
        trees = []
        for i in range(offsets.shape[0] - 1):
            lo, hi = offsets[i], offsets[i + 1]
            trees.append(
                Tree(
                    feature=arrays["feature"][lo:hi],
                    threshold=arrays["threshold"][lo:hi],
                    left=arrays["left"][lo:hi],
                    right=arrays["right"][lo:hi],
                    value=arrays["value"][lo:hi],
                )
            )
        return GBTModel(
            trees=trees,
            learning_rate=float(params["learning_rate"]),
            base_score=float(params["base_score"]),
        )
    if kind == "mlp":
        return MLPModel(w1=arrays["w1"], b1=arrays["b1"], w2=arrays["w2"], b2=arrays["b2"])
    if kind == "pls":
        return PLSModel(
            n_components=int(params["n_components"]),
            weights=arrays["weights"],
            loadings=arrays["loadings"],
            rotation=arrays["rotation"],
            x_mean=arrays["x_mean"],
            x_scale=arrays["x_scale"],
            fitted_on=int(params["fitted_on"]),
        )
    if kind == "log_odds":
        return LogOddsModel(
            vocab=tuple(params["vocab"]), z=arrays["z"], prior_scale=float(params["prior_scale"])
        )
    raise SerializeError(f"unknown envelope kind: {kind!r}")
