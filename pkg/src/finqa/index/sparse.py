"""Okapi BM25 inverted index with incremental add/remove."""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

K1_DEFAULT = 1.2
B_DEFAULT = 0.75

# Keeps numeric tokens like "45.45" and "23,913" whole so year/figure queries
# can disambiguate near-duplicate passages; letters and plain digit runs
# otherwise split on non-alphanumerics.
_TOKEN_RE = re.compile(r"\d+(?:[.,]\d+)+|[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class ScoredCandidate:
    chunk_id: str
    score: float
    source: str  # dense | sparse


class SparseIndex:
    def __init__(self, k1: float = K1_DEFAULT, b: float = B_DEFAULT):
        self.k1 = k1
        self.b = b
        self.postings: dict[str, dict[str, int]] = {}  # term -> chunk_id -> tf
        self.doc_lengths: dict[str, int] = {}

    @property
    def n_docs(self) -> int:
        return len(self.doc_lengths)

    @property
    def avgdl(self) -> float:
        if not self.doc_lengths:
            return 0.0
        return sum(self.doc_lengths.values()) / len(self.doc_lengths)

    def add(self, chunk_id: str, text: str) -> None:
        if chunk_id in self.doc_lengths:
            self.remove(chunk_id)
        toks = tokenize(text)
        self.doc_lengths[chunk_id] = len(toks)
        for term, tf in Counter(toks).items():
            self.postings.setdefault(term, {})[chunk_id] = tf

    def remove(self, chunk_id: str) -> bool:
        if chunk_id not in self.doc_lengths:
            return False
        del self.doc_lengths[chunk_id]
        empty_terms = []
        for term, plist in self.postings.items():
            plist.pop(chunk_id, None)
            if not plist:
                empty_terms.append(term)
        for term in empty_terms:
            del self.postings[term]
        return True

    def idf(self, term: str) -> float:
        n_t = len(self.postings.get(term, ()))
        return math.log(1.0 + (self.n_docs - n_t + 0.5) / (n_t + 0.5))

    def search(self, query: str, k: int) -> list[ScoredCandidate]:
        """Top-k by Okapi BM25 over the query terms; ties break by chunk_id."""
        if self.n_docs == 0:
            return []
        avgdl = self.avgdl
        scores: dict[str, float] = {}
        for term in tokenize(query):
            plist = self.postings.get(term)
            if not plist:
                continue
            idf = self.idf(term)
            for chunk_id, tf in plist.items():
                dl = self.doc_lengths[chunk_id]
                norm = self.k1 * (1.0 - self.b + self.b * dl / avgdl)
                scores[chunk_id] = scores.get(chunk_id, 0.0) + idf * tf * (self.k1 + 1.0) / (tf + norm)
        ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
        return [ScoredCandidate(cid, s, "sparse") for cid, s in ranked[:k]]

    def to_dict(self) -> dict:
        return {
            "k1": self.k1,
            "b": self.b,
            "postings": self.postings,
            "doc_lengths": self.doc_lengths,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SparseIndex":
        idx = cls(k1=d["k1"], b=d["b"])
        idx.postings = {t: dict(p) for t, p in d["postings"].items()}
        idx.doc_lengths = dict(d["doc_lengths"])
        return idx
