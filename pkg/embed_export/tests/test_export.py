import numpy as np
import pytest

from embed_export.cleaning import clean_text
from embed_export.cli import main
from embed_export.corpus import CorpusError, read_corpus
from embed_export.encoders import DEFAULT_ENCODER, EncoderUnavailable, resolve_encoder
from embed_export.export import ExportJob, export
from embed_export.writer import WriteFailure, write_embeddings

STUB_NAME = "stub-768"


class TestCorpusReader:
    def test_sorted_by_id(self, three_bug_corpus):
        records = read_corpus(three_bug_corpus)
        assert [r.id for r in records] == [45702, 64371, 1022921]

    def test_bad_line_reported(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": 1, "description": "x", "comments": []}\n{"id": 2}\n')
        with pytest.raises(CorpusError) as err:
            read_corpus(path)
        assert err.value.line_no == 2


class TestCleaning:
    def test_urls_dropped(self):
        assert clean_text("see https://x.y/z for log") == "see for log"

    def test_idempotent(self):
        text = "#0 raise()\n#1 abort()\nactual words"
        assert clean_text(clean_text(text)) == clean_text(text)


class TestExport:
    def test_round_trip_into_consumer(self, three_bug_corpus, stub_encoder, tmp_path):
        """The exported file loads in the consumer library with correct ids,
        dim 768 and a valid CRC (its loader verifies the checksum)."""
        out = tmp_path / "desc.bin"
        export(ExportJob(str(three_bug_corpus), "description", str(out),
                         encoder=STUB_NAME))
        from bugrank.features import load_embeddings, read_embedding_file

        ids, rows = read_embedding_file(out)
        assert ids == [45702, 64371, 1022921]  # ascending bug id
        assert rows.shape == (3, 768)
        reordered = load_embeddings(out, [1022921, 45702, 64371])
        assert np.array_equal(reordered[1], rows[0].astype(np.float64))

    def test_empty_description_is_encoded_not_zeroed(self, three_bug_corpus,
                                                     stub_encoder, tmp_path):
        out = tmp_path / "desc.bin"
        export(ExportJob(str(three_bug_corpus), "description", str(out),
                         encoder=STUB_NAME))
        from bugrank.features import read_embedding_file

        ids, rows = read_embedding_file(out)
        empty_row = rows[ids.index(64371)]
        assert np.array_equal(empty_row, stub_encoder.encode([""])[0])
        assert np.abs(empty_row).sum() > 0

    def test_comments_concatenated_and_cleaned(self, three_bug_corpus,
                                               stub_encoder, tmp_path):
        out = tmp_path / "comm.bin"
        export(ExportJob(str(three_bug_corpus), "comments", str(out),
                         encoder=STUB_NAME, batch_size=2))
        assert "confirmed on 16.04 patch attached" in stub_encoder.seen
        assert all("https://" not in text for text in stub_encoder.seen)

    def test_deterministic_bytes(self, three_bug_corpus, stub_encoder, tmp_path):
        a, b = tmp_path / "a.bin", tmp_path / "b.bin"
        export(ExportJob(str(three_bug_corpus), "description", str(a), encoder=STUB_NAME))
        export(ExportJob(str(three_bug_corpus), "description", str(b), encoder=STUB_NAME))
        assert a.read_bytes() == b.read_bytes()

    def test_no_temp_residue(self, three_bug_corpus, stub_encoder, tmp_path):
        out = tmp_path / "desc.bin"
        export(ExportJob(str(three_bug_corpus), "description", str(out), encoder=STUB_NAME))
        assert [p.name for p in tmp_path.glob("*.tmp")] == []

    def test_write_failure_on_missing_dir(self, tmp_path):
        with pytest.raises(WriteFailure):
            write_embeddings(tmp_path / "nope" / "x.bin", [1],
                             np.zeros((1, 8), dtype=np.float32))

    def test_unknown_encoder_unavailable(self, monkeypatch):
        monkeypatch.setenv("HF_HUB_OFFLINE", "1")  # fail fast, no retries
        with pytest.raises(EncoderUnavailable):
            resolve_encoder("definitely-not-a-real-encoder-name")

    def test_bad_field_rejected(self, three_bug_corpus):
        with pytest.raises(ValueError):
            ExportJob(str(three_bug_corpus), "title", "out.bin")


class TestCli:
    def test_export_success(self, three_bug_corpus, stub_encoder, tmp_path, capsys):
        out = tmp_path / "cli.bin"
        code = main(["export", "--corpus", str(three_bug_corpus),
                     "--field", "description", "--encoder", STUB_NAME,
                     "--out", str(out)])
        assert code == 0
        assert out.exists()

    def test_missing_corpus_exit_2(self, tmp_path, capsys):
        code = main(["export", "--corpus", str(tmp_path / "none.jsonl"),
                     "--field", "description", "--out", str(tmp_path / "o.bin")])
        assert code == 2

    def test_unavailable_encoder_exit_1(self, three_bug_corpus, tmp_path, capsys,
                                        monkeypatch):
        monkeypatch.setenv("HF_HUB_OFFLINE", "1")  # fail fast, no retries
        code = main(["export", "--corpus", str(three_bug_corpus),
                     "--field", "description", "--encoder", "no-such-model-xyz",
                     "--out", str(tmp_path / "o.bin")])
        assert code == 1


class TestDefaultEncoder:
    def test_round_trip_with_default_encoder(self, three_bug_corpus, tmp_path,
                                             monkeypatch):
        """Network-free once the model is in the local cache; skips (with the
        reason) when it is not."""
        monkeypatch.setenv("HF_HUB_OFFLINE", "1")
        monkeypatch.setenv("TRANSFORMERS_OFFLINE", "1")
        try:
            encoder = resolve_encoder(DEFAULT_ENCODER)
        except EncoderUnavailable as err:
            pytest.skip(f"pretrained encoder not in the local cache: {err}")
        from embed_export.encoders import register_encoder

        register_encoder(DEFAULT_ENCODER, lambda: encoder)
        out = tmp_path / "desc.bin"
        export(ExportJob(str(three_bug_corpus), "description", str(out)))
        from bugrank.features import read_embedding_file

        ids, rows = read_embedding_file(out)
        assert ids == [45702, 64371, 1022921]
        assert rows.shape == (3, 768)
