"""Batch extraction of transformer sentence vectors.

Reads the corpus JSONL schema ({"id", "platform", "text", "label"?}), runs
a frozen pretrained encoder in inference mode, takes the final-layer
output vector at the CLS position, and writes the line-oriented embedding
format consumed downstream:

    #dim=<d>
    <id><TAB><v1> <v2> ... <vd>

No fine-tuning, no dropout: the same inputs always produce the same file.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import torch
from transformers import AutoModel, AutoTokenizer

DEFAULT_MODEL = "bert-base-uncased"


class ExportError(Exception):
    pass


@dataclass
class ExportJob:
    input_path: str
    output_path: str
    model_id: str = DEFAULT_MODEL
    batch_size: int = 32
    max_length: int = 128
    device: str = "cpu"

    def __post_init__(self):
        if self.batch_size < 1:
            raise ExportError("batch size must be >= 1")
        if self.max_length < 8:
            raise ExportError("max sequence length must be >= 8")


def read_corpus(path) -> list[tuple[str, str]]:
    """(id, text) pairs from a corpus JSONL file; id collisions are fatal."""
    records: list[tuple[str, str]] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ExportError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from None
            msg_id = obj.get("id")
            text = obj.get("text")
            if not msg_id or text in (None, ""):
                raise ExportError(f"{path}:{lineno}: record needs non-empty id and text")
            if msg_id in seen:
                raise ExportError(f"{path}:{lineno}: id collision: {msg_id!r}")
            seen.add(msg_id)
            records.append((str(msg_id), str(text)))
    if not records:
        raise ExportError(f"{path}: empty input")
    return records


def export_embeddings(job: ExportJob) -> int:
    """Write one embedding record per input message; returns the count."""
    records = read_corpus(job.input_path)
    try:
        tokenizer = AutoTokenizer.from_pretrained(job.model_id)
        model = AutoModel.from_pretrained(job.model_id)
    except Exception as exc:
        raise ExportError(f"cannot load encoder {job.model_id!r}: {exc}") from exc
    device = torch.device(job.device)
    model.to(device)
    model.eval()
    dim = int(model.config.hidden_size)

    lines = [f"#dim={dim}"]
    with torch.no_grad():
        for start in range(0, len(records), job.batch_size):
            batch = records[start : start + job.batch_size]
            encoded = tokenizer(
                [text for _, text in batch],
                padding=True,
                truncation=True,
                max_length=job.max_length,
                return_tensors="pt",
            ).to(device)
            output = model(**encoded)
            cls_vectors = output.last_hidden_state[:, 0, :].cpu().numpy()
            for (msg_id, _), vector in zip(batch, cls_vectors):
                lines.append(msg_id + "\t" + " ".join(repr(float(v)) for v in vector))
    out = Path(job.output_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return len(records)


@dataclass
class VerifyReport:
    ok: bool
    problems: list[str] = field(default_factory=list)
    dim: int | None = None
    records: int = 0


def verify_export(embedding_path, corpus_path) -> VerifyReport:
    """Check id coverage, dimensional consistency, and finiteness."""
    problems: list[str] = []
    corpus_ids = {msg_id for msg_id, _ in read_corpus(corpus_path)}
    dim = None
    seen: set[str] = set()
    count = 0
    with open(embedding_path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("#dim="):
            return VerifyReport(ok=False, problems=[f"{embedding_path}: missing #dim= header"])
        dim = int(header[len("#dim=") :])
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            count += 1
            try:
                msg_id, payload = line.rstrip("\n").split("\t", 1)
            except ValueError:
                problems.append(f"line {lineno}: not id<TAB>values")
                continue
            if msg_id in seen:
                problems.append(f"line {lineno}: duplicate id {msg_id!r}")
            seen.add(msg_id)
            values = payload.split()
            if len(values) != dim:
                problems.append(f"line {lineno}: {len(values)} values, expected {dim}")
            for position, value in enumerate(values):
                v = float(value)
                if math.isnan(v) or math.isinf(v):
                    problems.append(
                        f"line {lineno}: non-finite component at position {position}"
                    )
                    break
    missing = sorted(corpus_ids - seen)
    for msg_id in missing:
        problems.append(f"missing embedding for id {msg_id!r}")
    extra = sorted(seen - corpus_ids)
    for msg_id in extra:
        problems.append(f"embedding for unknown id {msg_id!r}")
    return VerifyReport(ok=not problems, problems=problems, dim=dim, records=count)
