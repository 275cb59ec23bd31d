"""Command-line entry points for the embedding exporter."""

from __future__ import annotations

import argparse
import sys

from .exporter import DEFAULT_MODEL, ExportError, ExportJob, export_embeddings, verify_export


def export_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="export-embeddings",
        description="Export frozen-encoder CLS sentence vectors for a JSONL corpus.",
    )
    parser.add_argument("--input", required=True, help="corpus JSONL file")
    parser.add_argument("--output", required=True, help="embedding file to write")
    parser.add_argument("--model", default=DEFAULT_MODEL, help="encoder identifier or local path")
    parser.add_argument("--batch", type=int, default=32)
    parser.add_argument("--max-len", type=int, default=128)
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args(argv)
    try:
        count = export_embeddings(
            ExportJob(
                input_path=args.input,
                output_path=args.output,
                model_id=args.model,
                batch_size=args.batch,
                max_length=args.max_len,
                device=args.device,
            )
        )
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {count} embeddings to {args.output}")
    return 0


def verify_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="verify-embeddings",
        description="Check an embedding file against the corpus it should cover.",
    )
    parser.add_argument("--embeddings", required=True)
    parser.add_argument("--corpus", required=True)
    args = parser.parse_args(argv)
    try:
        report = verify_export(args.embeddings, args.corpus)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for problem in report.problems:
        print(problem, file=sys.stderr)
    print(f"dim={report.dim} records={report.records} ok={report.ok}")
    return 0 if report.ok else 1


def export_entrypoint() -> None:
    sys.exit(export_main())


def verify_entrypoint() -> None:
    sys.exit(verify_main())
