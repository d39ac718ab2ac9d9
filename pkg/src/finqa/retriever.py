"""Multi-hypothesis hybrid retrieval.

Fan a user query out into N non-equivalent variants, write one hypothetical
answer document per variant, dense-search with each hypothetical's embedding,
add BM25 candidates for the original query, then rerank the merged pool down
to the final context set. The single-fanout baseline mode embeds the mean of
N hypothetical documents for the original query instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gateway import GenerationRequest, ModelGateway
from .index.sparse import ScoredCandidate
from .index.store import HybridIndex
from .ingest import Chunk
from .prompts import HYPOTHETICAL_DOC_PROMPT, QUERY_FANOUT_PROMPT


@dataclass
class RetrievalConfig:
    n_queries: int = 3
    k1_dense: int = 10
    k2_sparse: int = 15
    k_final: int = 8
    mode: str = "multi_hyde"  # multi_hyde | hyde_baseline

    def validate(self) -> None:
        if self.n_queries < 1:
            raise ValueError("n_queries must be >= 1")
        if self.k_final > self.n_queries * self.k1_dense + self.k2_sparse:
            raise ValueError("k_final exceeds the maximum candidate pool")
        if self.mode not in ("multi_hyde", "hyde_baseline"):
            raise ValueError(f"unknown retrieval mode: {self.mode}")


@dataclass
class QueryFanout:
    original: str
    variants: list[str]
    hypotheticals: list[str]


@dataclass
class ContextSet:
    chunks: list[tuple[Chunk, float, str]]  # (chunk, rerank score, source)
    fanout: QueryFanout
    trace: dict = field(default_factory=dict)

    def chunk_ids(self) -> list[str]:
        return [c.chunk_id for c, _, _ in self.chunks]

    def to_trace_dict(self) -> dict:
        return {
            "original": self.fanout.original,
            "variants": self.fanout.variants,
            "hypotheticals": self.fanout.hypotheticals,
            "chunks": [
                {"chunk_id": c.chunk_id, "doc_id": c.doc_id, "kind": c.kind,
                 "score": s, "source": src, "text": c.text}
                for c, s, src in self.chunks
            ],
            **self.trace,
        }


def generate_queries(q: str, n: int, gateway: ModelGateway,
                     trace: dict | None = None) -> list[str]:
    """Variant 1 is always the original query; the model adds n-1 more."""
    if not q.strip():
        raise ValueError("empty query")
    if n == 1:
        return [q]
    prompt = QUERY_FANOUT_PROMPT.format(question=q, n_variants=n - 1)
    text, _ = gateway.generate(
        GenerationRequest(messages=[("user", prompt)], temperature=0.7)
    )
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    variants = [q]
    for ln in lines:
        if ln not in variants:
            variants.append(ln)
        if len(variants) == n:
            break
    while len(variants) < n:
        variants.append(f"{q} (variant {len(variants)})")
        if trace is not None:
            trace.setdefault("warnings", []).append("fanout underfilled, padded")
    return variants


def generate_hypothetical(q_i: str, gateway: ModelGateway,
                          trace: dict | None = None) -> str:
    if not q_i.strip():
        raise ValueError("empty query")
    prompt = HYPOTHETICAL_DOC_PROMPT.format(question=q_i)
    text, _ = gateway.generate(
        GenerationRequest(messages=[("user", prompt)], temperature=0.7, max_tokens=256)
    )
    if not text.strip():
        if trace is not None:
            trace.setdefault("warnings", []).append("empty hypothetical, used query")
        return q_i
    return text


def mean_embedding(vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Arithmetic mean of embeddings and its unit-normalized form."""
    raw = np.mean(np.asarray(vectors, dtype=np.float64), axis=0)
    norm = np.linalg.norm(raw)
    return raw, (raw / norm if norm > 0 else raw)


def hyde_embed(q: str, n: int, gateway: ModelGateway,
               trace: dict | None = None) -> tuple[np.ndarray, list[str]]:
    """Single-query baseline embedding: mean of n hypothetical-document
    embeddings for q, unit-normalized for search."""
    hyps = [generate_hypothetical(q, gateway, trace) for _ in range(n)]
    vecs = gateway.embed(hyps)
    raw, unit = mean_embedding(vecs)
    if trace is not None:
        trace["mean_embedding_raw"] = raw.tolist()
    return unit, hyps


def _dedup_max(cands: list[ScoredCandidate]) -> list[ScoredCandidate]:
    """Keep the max-scoring occurrence per chunk_id, deterministic order."""
    best: dict[str, ScoredCandidate] = {}
    for c in cands:
        cur = best.get(c.chunk_id)
        if cur is None or c.score > cur.score:
            best[c.chunk_id] = c
    return sorted(best.values(), key=lambda c: (-c.score, c.chunk_id))


def _interleave(dense: list[ScoredCandidate], sparse: list[ScoredCandidate]) -> list[ScoredCandidate]:
    out, seen = [], set()
    for i in range(max(len(dense), len(sparse))):
        for lst in (dense, sparse):
            if i < len(lst) and lst[i].chunk_id not in seen:
                seen.add(lst[i].chunk_id)
                out.append(lst[i])
    return out


def rerank(q: str, candidates: list[ScoredCandidate], k_final: int,
           index: HybridIndex, gateway: ModelGateway,
           trace: dict | None = None) -> list[tuple[Chunk, float, str]]:
    """Score the deduplicated pool against the original query and truncate."""
    if not candidates:
        return []
    chunks = [index.chunks[c.chunk_id] for c in candidates]
    try:
        scores = gateway.score_pairs(q, [c.text for c in chunks])
    except Exception as e:  # noqa: BLE001 - scorer failure falls back, recorded
        if trace is not None:
            trace.setdefault("warnings", []).append(f"rerank failed, kept pre-rerank order: {e}")
        dense = [c for c in candidates if c.source == "dense"]
        sparse = [c for c in candidates if c.source == "sparse"]
        ordered = _interleave(dense, sparse)[:k_final]
        return [(index.chunks[c.chunk_id], c.score, c.source) for c in ordered]
    order = sorted(range(len(candidates)), key=lambda i: -scores[i])
    if trace is not None:
        trace["rerank_scores"] = {candidates[i].chunk_id: scores[i] for i in order}
    return [(chunks[i], scores[i], candidates[i].source) for i in order[:k_final]]


def retrieve(q: str, cfg: RetrievalConfig, index: HybridIndex,
             gateway: ModelGateway) -> ContextSet:
    cfg.validate()
    trace: dict = {"mode": cfg.mode, "generator_calls": 0}

    dense_cands: list[ScoredCandidate] = []
    if cfg.mode == "multi_hyde":
        variants = generate_queries(q, cfg.n_queries, gateway, trace)
        if cfg.n_queries > 1:
            trace["generator_calls"] += 1
        hypotheticals: list[str] = []
        failed = 0
        for q_i in variants:
            try:
                hyp = generate_hypothetical(q_i, gateway, trace)
                trace["generator_calls"] += 1
                vec = gateway.embed([hyp])[0]
            except Exception as e:  # noqa: BLE001 - partial fanout tolerated
                failed += 1
                trace.setdefault("warnings", []).append(f"variant failed: {e}")
                continue
            hypotheticals.append(hyp)
            dense_cands.extend(index.dense_search(vec, cfg.k1_dense))
        if failed and not hypotheticals:
            raise RuntimeError(f"all {cfg.n_queries} fanout variants failed")
        fanout = QueryFanout(original=q, variants=variants, hypotheticals=hypotheticals)
    else:
        vec, hyps = hyde_embed(q, cfg.n_queries, gateway, trace)
        trace["generator_calls"] += cfg.n_queries
        dense_cands.extend(index.dense_search(vec, cfg.k1_dense))
        fanout = QueryFanout(original=q, variants=[q], hypotheticals=hyps)

    sparse_cands = index.sparse_search(q, cfg.k2_sparse) if cfg.k2_sparse > 0 else []
    trace["dense_candidates"] = len(dense_cands)
    trace["sparse_candidates"] = len(sparse_cands)

    pool = _dedup_max(dense_cands + sparse_cands)
    trace["deduped_candidates"] = len(pool)

    chunks = rerank(q, pool, cfg.k_final, index, gateway, trace)
    return ContextSet(chunks=chunks, fanout=fanout, trace=trace)
