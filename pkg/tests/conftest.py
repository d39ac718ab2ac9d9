import json

import numpy as np
import pytest

from finqa.gateway import MockEmbedder, ModelGateway, OverlapScorer, ScriptedGenerator
from finqa.index.store import HybridIndex
from finqa.ingest import Chunk


def make_chunks(texts, doc_id="doc"):
    return [
        Chunk(chunk_id=f"{doc_id}:{i}", doc_id=doc_id, kind="prose", text=t,
              char_span=(0, len(t)), seq=i)
        for i, t in enumerate(texts)
    ]


def make_index(texts, doc_id="doc", mode="exact", dim=64):
    emb = MockEmbedder(dim=dim)
    index = HybridIndex(dim=dim, mode=mode)
    chunks = make_chunks(texts, doc_id)
    index.upsert_chunks(chunks, emb.embed(texts))
    return index


@pytest.fixture
def embedder():
    return MockEmbedder()


@pytest.fixture
def scripted_gateway():
    def factory(responses=None):
        return ModelGateway(
            embedder=MockEmbedder(),
            generator=ScriptedGenerator(responses or []),
            reranker=OverlapScorer(),
        )

    return factory


@pytest.fixture
def fixture_corpus_path(tmp_path):
    """Small jsonl corpus with prose and a table, AWK-flavoured fixtures."""
    lines = [
        {
            "doc_id": "awk_2015",
            "title": "AWK 10-K 2015",
            "ticker": "AWK",
            "filed on": "31 December 2015",
            "body_blocks": [
                "The weighted-average grant date fair value per share of RSUs "
                "granted was 45.45 in 2014 and 40.13 in 2013. "
                "[45.45 -40.13]/40.13 = 13.3%",
                {"table": {
                    "header": ["year", "fair value per share"],
                    "rows": [["2013", "40.13"], ["2014", "45.45"]],
                }},
            ],
        },
        {
            "doc_id": "awk_2017",
            "title": "AWK 10-K 2017",
            "ticker": "AWK",
            "filed on": "31 December 2017",
            "text": "Amortization of contributions in aid of construction was "
                    "27, 26, and 24 for the years ended December 31, 2016, 2015, "
                    "and 2014.",
        },
        {
            "doc_id": "amd_2022",
            "title": "AMD 10-K 2022",
            "ticker": "AMD",
            "text": "AMD reported revenue growth driven by data center demand "
                    "in fiscal year 2022.",
        },
    ]
    path = tmp_path / "corpus.jsonl"
    path.write_text("\n".join(json.dumps(rec) for rec in lines), encoding="utf-8")
    return path


def random_unit_vectors(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    vecs = rng.standard_normal((n, dim))
    return vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
