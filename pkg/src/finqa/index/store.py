"""Hybrid retrieval substrate: dense + BM25 over one chunk set, persistable."""

from __future__ import annotations

import hashlib
import io
import json
import zipfile
from dataclasses import asdict
from pathlib import Path

import numpy as np

from ..ingest import Chunk
from .dense import DimensionMismatch, ExactDenseIndex, HnswIndex
from .sparse import ScoredCandidate, SparseIndex

FORMAT_VERSION = 1


class SnapshotError(Exception):
    pass


class HybridIndex:
    """Chunks searchable by cosine similarity and by BM25, with dynamic
    add/remove of whole documents. Mode is "exact" or "hnsw"."""

    def __init__(self, dim: int, mode: str = "exact", m: int = 16,
                 ef_construction: int = 200, ef_search: int = 64):
        if mode not in ("exact", "hnsw"):
            raise ValueError(f"unknown dense mode: {mode}")
        self.dim = dim
        self.mode = mode
        if mode == "hnsw":
            self.dense = HnswIndex(dim, m=m, ef_construction=ef_construction,
                                   ef_search=ef_search)
        else:
            self.dense = ExactDenseIndex(dim)
        self.sparse = SparseIndex()
        self.chunks: dict[str, Chunk] = {}
        self._doc_chunks: dict[str, set[str]] = {}

    def __len__(self) -> int:
        return len(self.chunks)

    def upsert_chunks(self, chunks: list[Chunk], vectors: np.ndarray) -> int:
        if len(chunks) != len(vectors):
            raise ValueError(f"{len(chunks)} chunks vs {len(vectors)} vectors")
        for v in vectors:
            if np.asarray(v).shape != (self.dim,):
                raise DimensionMismatch(
                    f"vector dim {np.asarray(v).shape} != index dim {self.dim}"
                )
        for chunk, vec in zip(chunks, vectors):
            if chunk.chunk_id in self.chunks:
                self._drop_chunk(chunk.chunk_id)
            self.chunks[chunk.chunk_id] = chunk
            self._doc_chunks.setdefault(chunk.doc_id, set()).add(chunk.chunk_id)
            self.dense.add(chunk.chunk_id, vec)
            self.sparse.add(chunk.chunk_id, chunk.text)
        return len(chunks)

    def _drop_chunk(self, chunk_id: str) -> None:
        chunk = self.chunks.pop(chunk_id)
        self._doc_chunks[chunk.doc_id].discard(chunk_id)
        if not self._doc_chunks[chunk.doc_id]:
            del self._doc_chunks[chunk.doc_id]
        self.dense.remove(chunk_id)
        self.sparse.remove(chunk_id)

    def remove_document(self, doc_id: str) -> int:
        chunk_ids = list(self._doc_chunks.get(doc_id, ()))
        for cid in chunk_ids:
            self._drop_chunk(cid)
        return len(chunk_ids)

    def dense_search(self, vec: np.ndarray, k: int) -> list[ScoredCandidate]:
        return self.dense.search(vec, k)

    def sparse_search(self, query: str, k: int) -> list[ScoredCandidate]:
        return self.sparse.search(query, k)

    def stats(self) -> dict:
        return {
            "chunks": len(self.chunks),
            "documents": len(self._doc_chunks),
            "mode": self.mode,
            "dim": self.dim,
            "avgdl": self.sparse.avgdl,
        }

    # -- persistence --------------------------------------------------------

    def persist(self, path: str | Path) -> None:
        ids = sorted(self.chunks)
        by_id = dict(self.dense.items())
        vecs = np.array([by_id[cid] for cid in ids])
        vec_buf = io.BytesIO()
        np.save(vec_buf, vecs.reshape(len(ids), self.dim) if ids else
                np.zeros((0, self.dim)))
        chunk_lines = "\n".join(
            json.dumps(asdict(self.chunks[cid]), sort_keys=True) for cid in ids
        ).encode("utf-8")
        vec_bytes = vec_buf.getvalue()
        checksum = hashlib.sha256(vec_bytes + chunk_lines).hexdigest()
        meta = {
            "version": FORMAT_VERSION,
            "dim": self.dim,
            "mode": self.mode,
            "count": len(ids),
            "checksum": checksum,
        }
        with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
            zf.writestr("meta.json", json.dumps(meta))
            zf.writestr("vectors.npy", vec_bytes)
            zf.writestr("chunks.jsonl", chunk_lines)

    @classmethod
    def load(cls, path: str | Path) -> "HybridIndex":
        try:
            with zipfile.ZipFile(path) as zf:
                meta = json.loads(zf.read("meta.json"))
                if meta.get("version") != FORMAT_VERSION:
                    raise SnapshotError(
                        f"snapshot version {meta.get('version')} != {FORMAT_VERSION}"
                    )
                vec_bytes = zf.read("vectors.npy")
                chunk_lines = zf.read("chunks.jsonl")
        except (zipfile.BadZipFile, KeyError, json.JSONDecodeError) as e:
            raise SnapshotError(f"unreadable snapshot {path}: {e}") from e
        checksum = hashlib.sha256(vec_bytes + chunk_lines).hexdigest()
        if checksum != meta["checksum"]:
            raise SnapshotError(f"snapshot checksum mismatch in {path}")

        idx = cls(dim=meta["dim"], mode=meta["mode"])
        vecs = np.load(io.BytesIO(vec_bytes))
        chunks = []
        for line in chunk_lines.decode("utf-8").splitlines():
            if line:
                d = json.loads(line)
                d["char_span"] = tuple(d["char_span"])
                chunks.append(Chunk(**d))
        idx.upsert_chunks(chunks, vecs)
        return idx
