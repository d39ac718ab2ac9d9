import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finqa.ingest import (
    ChunkingConfig,
    CorpusError,
    SourceDocument,
    TableBlock,
    chunk_document,
    extract_table_views,
    load_corpus,
    load_manifest,
    reconstruct_prose,
    sync_corpus,
    write_manifest,
)


def doc(body, doc_id="d1"):
    return SourceDocument(doc_id=doc_id, title="t", body=tuple(body))


class TestLoadCorpus:
    def test_empty_directory(self, tmp_path):
        assert load_corpus(tmp_path, "markdown-dir") == []

    def test_appendix_record_metadata(self, tmp_path):
        rec = {
            "question": "For American Water Works, what was the rate of growth "
                        "from 2013 to 2014 in the fair value per share",
            "answer": "",
            "context": "[45.45 -40.13]/40.13 = 13.3%",
            "ticker": "AWK",
            "filed on": "31 December 2015",
            "text": "[45.45 -40.13]/40.13 = 13.3%",
        }
        p = tmp_path / "one.jsonl"
        p.write_text(json.dumps(rec))
        docs = load_corpus(p)
        assert len(docs) == 1
        assert docs[0].metadata["ticker"] == "AWK"
        assert docs[0].metadata["filed_on"] == "31 December 2015"

    def test_table_block_pass_through(self, tmp_path):
        rec = {"doc_id": "t", "body_blocks": [
            {"table": {"header": ["a", "b"], "rows": [["1", "2"], ["3", "4"], ["5", "6"]]}}
        ]}
        p = tmp_path / "t.jsonl"
        p.write_text(json.dumps(rec))
        docs = load_corpus(p)
        table = docs[0].body[0]
        assert isinstance(table, TableBlock)
        assert table.n_rows == 3 and table.n_cols == 2

    def test_malformed_record_names_file_and_line(self, tmp_path):
        p = tmp_path / "bad.jsonl"
        p.write_text('{"text": "ok"}\n{not json}\n')
        with pytest.raises(CorpusError, match=r"bad\.jsonl:2"):
            load_corpus(p)

    def test_duplicate_doc_ids_rejected(self, tmp_path):
        p = tmp_path / "dup.jsonl"
        p.write_text('{"doc_id": "x", "text": "a"}\n{"doc_id": "x", "text": "b"}\n')
        with pytest.raises(CorpusError, match="duplicate"):
            load_corpus(p)

    def test_ragged_table_rejected(self, tmp_path):
        p = tmp_path / "r.jsonl"
        p.write_text(json.dumps({"body_blocks": [
            {"table": {"header": ["a", "b"], "rows": [["1"]]}}]}))
        with pytest.raises(CorpusError, match="ragged"):
            load_corpus(p)


class TestChunking:
    def test_short_text_single_chunk(self):
        chunks = chunk_document(doc(["hello world"]))
        assert len(chunks) == 1
        assert chunks[0].text == "hello world"
        assert chunks[0].kind == "prose"

    def test_reconstruction_10k_chars(self):
        text = " ".join(f"word{i}" for i in range(1500))[:10_000]
        cfg = ChunkingConfig(max_chunk_chars=1000, overlap_chars=100)
        chunks = chunk_document(doc([text]), cfg)
        assert all(len(c.text) <= 1000 for c in chunks)
        assert len(chunks) > 1
        assert reconstruct_prose(chunks, 100) == text

    def test_kinds_tagged(self):
        d = doc(["para one.", "para two.",
                 TableBlock(header=("a",), rows=(("1",),))])
        chunks = chunk_document(d)
        kinds = [c.kind for c in chunks]
        assert kinds.count("prose") == 2
        assert kinds.count("table") == 1

    def test_long_token_hard_split(self):
        cfg = ChunkingConfig(max_chunk_chars=50, overlap_chars=0)
        chunks = chunk_document(doc(["x" * 500]), cfg)
        assert all(len(c.text) <= 50 for c in chunks)
        assert "".join(c.text for c in chunks) == "x" * 500

    def test_determinism(self):
        d = doc(["a. " * 400])
        cfg = ChunkingConfig(max_chunk_chars=100, overlap_chars=10)
        first = chunk_document(d, cfg)
        second = chunk_document(d, cfg)
        assert first == second

    def test_seq_strictly_increasing(self):
        d = doc(["one two. " * 200, TableBlock(header=("h",), rows=(("v",),))])
        chunks = chunk_document(d, ChunkingConfig(max_chunk_chars=80, overlap_chars=8))
        seqs = [c.seq for c in chunks]
        assert seqs == sorted(set(seqs))

    def test_bad_config_rejected(self):
        with pytest.raises(ValueError):
            ChunkingConfig(max_chunk_chars=100, overlap_chars=100).validate()

    @settings(max_examples=50, deadline=None)
    @given(
        text=st.text(alphabet="ab .\n", min_size=1, max_size=3000),
        max_chars=st.integers(min_value=20, max_value=400),
        overlap=st.integers(min_value=0, max_value=15),
    )
    def test_reconstruction_property(self, text, max_chars, overlap):
        cfg = ChunkingConfig(max_chunk_chars=max_chars, overlap_chars=overlap)
        chunks = chunk_document(doc([text]), cfg)
        assert all(len(c.text) <= max_chars for c in chunks)
        assert reconstruct_prose(chunks, overlap) == text


class TestTableViews:
    def test_minimal_table(self):
        views = extract_table_views(TableBlock(header=("h",), rows=(("v",),)), "d")
        assert len(views) == 3  # whole + 1 row + 1 column
        assert views[0].kind == "table"
        assert all(v.kind == "table_aggregate" for v in views[1:])

    def test_3x2_count(self):
        t = TableBlock(header=("a", "b"),
                       rows=(("1", "2"), ("3", "4"), ("5", "6")))
        assert len(extract_table_views(t, "d")) == 1 + 3 + 2

    def test_numeric_cell_token_preserved(self):
        t = TableBlock(header=("year", "value"), rows=(("2014", "45.45"),))
        texts = [v.text for v in extract_table_views(t, "d")]
        assert any("45.45" in s for s in texts)

    def test_zero_row_table_only_whole_chunk(self):
        t = TableBlock(header=("a", "b"), rows=())
        assert len(extract_table_views(t, "d")) == 1


class TestSync:
    def _write(self, p, name, content):
        (p / name).write_text(content)

    def test_fixpoint(self, tmp_path):
        self._write(tmp_path, "a.md", "alpha")
        _, manifest = sync_corpus(tmp_path, {})
        change, _ = sync_corpus(tmp_path, manifest)
        assert change.is_empty()

    def test_deleted_file(self, tmp_path):
        self._write(tmp_path, "a.md", "alpha")
        self._write(tmp_path, "b.md", "beta")
        _, manifest = sync_corpus(tmp_path, {})
        (tmp_path / "b.md").unlink()
        change, _ = sync_corpus(tmp_path, manifest)
        assert change.removed == ["b"]
        assert not change.added and not change.modified

    def test_edited_file_digest_inequality(self, tmp_path):
        self._write(tmp_path, "a.md", "alpha")
        _, manifest = sync_corpus(tmp_path, {})
        self._write(tmp_path, "a.md", "alpha edited")
        change, new_manifest = sync_corpus(tmp_path, manifest)
        assert change.modified == ["a"]
        assert new_manifest["a"] != manifest["a"]

    def test_manifest_round_trip(self, tmp_path):
        entries = {"a": "d1", "b": "d2"}
        path = tmp_path / "manifest.jsonl"
        write_manifest(path, entries)
        assert load_manifest(path) == entries
