import json

import pytest
import torch
from transformers import BertConfig, BertModel, BertTokenizerFast

from embed_exporter import ExportError, ExportJob, export_embeddings, verify_export
from embed_exporter.cli import export_main, verify_main

# The default encoder (bert-base-uncased, hidden size 768) is not
# downloadable in offline environments, so tests exercise the exact same
# code path through a locally constructed 768-wide BERT passed via the
# model-identifier passthrough.

VOCAB = (
    ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    + list("abcdefghijklmnopqrstuvwxyz")
    + ["the", "and", "words", "some", "##s", "##ing"]
)


@pytest.fixture(scope="session")
def local_encoder(tmp_path_factory):
    root = tmp_path_factory.mktemp("encoder")
    vocab_file = root / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizerFast(vocab_file=str(vocab_file), do_lower_case=True)
    torch.manual_seed(0)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=768,
        num_hidden_layers=2,
        num_attention_heads=4,
        intermediate_size=256,
        max_position_embeddings=160,
    )
    model = BertModel(config)
    model.save_pretrained(root)
    tokenizer.save_pretrained(root)
    return str(root)


@pytest.fixture(scope="session")
def corpus_file(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    path = root / "messages.jsonl"
    records = [
        {"id": "m1", "platform": "x", "text": "some words and the rest", "label": "clean"},
        {"id": "m2", "platform": "x", "text": "more words again"},
        {"id": "m3", "platform": "y", "text": "the " + "and words " * 200},  # > max length
    ]
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
    return path


class TestExport:
    def test_export_shape_and_header(self, local_encoder, corpus_file, tmp_path):
        out = tmp_path / "vectors.emb"
        count = export_embeddings(
            ExportJob(str(corpus_file), str(out), model_id=local_encoder, batch_size=2)
        )
        assert count == 3
        lines = out.read_text().splitlines()
        assert lines[0] == "#dim=768"
        assert len(lines) == 4
        for line in lines[1:]:
            msg_id, payload = line.split("\t")
            assert len(payload.split()) == 768

    def test_repeated_runs_byte_identical(self, local_encoder, corpus_file, tmp_path):
        a = tmp_path / "a.emb"
        b = tmp_path / "b.emb"
        job = dict(model_id=local_encoder, batch_size=2, max_length=32)
        export_embeddings(ExportJob(str(corpus_file), str(a), **job))
        export_embeddings(ExportJob(str(corpus_file), str(b), **job))
        assert a.read_bytes() == b.read_bytes()

    def test_long_message_truncated_but_present(self, local_encoder, corpus_file, tmp_path):
        out = tmp_path / "trunc.emb"
        export_embeddings(
            ExportJob(str(corpus_file), str(out), model_id=local_encoder, max_length=16)
        )
        ids = [l.split("\t")[0] for l in out.read_text().splitlines()[1:]]
        assert ids == ["m1", "m2", "m3"]

    def test_unloadable_model(self, corpus_file, tmp_path):
        with pytest.raises(ExportError, match="cannot load"):
            export_embeddings(
                ExportJob(str(corpus_file), str(tmp_path / "x.emb"), model_id="/nonexistent/model")
            )

    def test_id_collision(self, local_encoder, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text(
            '{"id": "a", "platform": "x", "text": "hi there"}\n'
            '{"id": "a", "platform": "x", "text": "again"}\n'
        )
        with pytest.raises(ExportError, match="collision"):
            export_embeddings(ExportJob(str(bad), str(tmp_path / "x.emb"), model_id=local_encoder))

    def test_empty_input(self, local_encoder, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        with pytest.raises(ExportError, match="empty"):
            export_embeddings(ExportJob(str(empty), str(tmp_path / "x.emb"), model_id=local_encoder))


class TestVerify:
    def test_complete_file_passes(self, local_encoder, corpus_file, tmp_path):
        out = tmp_path / "ok.emb"
        export_embeddings(ExportJob(str(corpus_file), str(out), model_id=local_encoder))
        report = verify_export(out, corpus_file)
        assert report.ok
        assert report.dim == 768
        assert report.records == 3

    def test_missing_id_listed(self, local_encoder, corpus_file, tmp_path):
        out = tmp_path / "short.emb"
        export_embeddings(ExportJob(str(corpus_file), str(out), model_id=local_encoder))
        lines = out.read_text().splitlines()
        out.write_text("\n".join(lines[:-1]) + "\n")  # drop m3
        report = verify_export(out, corpus_file)
        assert not report.ok
        assert any("m3" in p for p in report.problems)

    def test_nan_component_flagged_with_position(self, local_encoder, corpus_file, tmp_path):
        out = tmp_path / "nan.emb"
        export_embeddings(ExportJob(str(corpus_file), str(out), model_id=local_encoder))
        lines = out.read_text().splitlines()
        msg_id, payload = lines[1].split("\t")
        values = payload.split()
        values[5] = "nan"
        lines[1] = msg_id + "\t" + " ".join(values)
        out.write_text("\n".join(lines) + "\n")
        report = verify_export(out, corpus_file)
        assert not report.ok
        assert any("position 5" in p for p in report.problems)


class TestRoundTripWithPrimary:
    def test_loads_through_primary_reader(self, local_encoder, corpus_file, tmp_path):
        # Cross-component contract: the primary package must ingest our
        # files with zero errors.
        from hatestack.embeddings import TableProvider, load_embeddings

        out = tmp_path / "primary.emb"
        export_embeddings(ExportJob(str(corpus_file), str(out), model_id=local_encoder))
        table = load_embeddings(out)
        assert table.dim == 768
        assert set(table.vectors) == {"m1", "m2", "m3"}
        provider = TableProvider(table)
        assert provider.vector("m1", []).shape == (768,)


class TestCli:
    def test_export_and_verify_commands(self, local_encoder, corpus_file, tmp_path, capsys):
        out = tmp_path / "cli.emb"
        rc = export_main(
            [
                "--input",
                str(corpus_file),
                "--output",
                str(out),
                "--model",
                local_encoder,
                "--batch",
                "2",
                "--max-len",
                "32",
            ]
        )
        assert rc == 0
        rc = verify_main(["--embeddings", str(out), "--corpus", str(corpus_file)])
        assert rc == 0
        assert "ok=True" in capsys.readouterr().out

    def test_verify_fails_on_tampered_file(self, local_encoder, corpus_file, tmp_path):
        out = tmp_path / "cli2.emb"
        export_main(
            ["--input", str(corpus_file), "--output", str(out), "--model", local_encoder]
        )
        lines = out.read_text().splitlines()
        out.write_text("\n".join(lines[:-1]) + "\n")
        assert verify_main(["--embeddings", str(out), "--corpus", str(corpus_file)]) == 1
