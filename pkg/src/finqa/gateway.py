"""Gateway to model services: embeddings, generation, and pair scoring.

All other modules talk to models only through :class:`ModelGateway`, so the
whole pipeline runs deterministically offline with the mock backends.
"""

from __future__ import annotations

import hashlib
import threading
import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

EMBED_DIM = 64


class GatewayError(Exception):
    pass


class NoNetworkError(GatewayError):
    """Raised when a network backend is invoked in the fixture profile."""


@dataclass
class UsageMeter:
    in_tokens: int = 0
    out_tokens: int = 0
    wall_time: float = 0.0

    def add(self, other: "UsageMeter") -> None:
        self.in_tokens += other.in_tokens
        self.out_tokens += other.out_tokens
        self.wall_time += other.wall_time


@dataclass
class GenerationRequest:
    messages: list[tuple[str, str]]  # (role, content)
    temperature: float = 0.0
    max_tokens: int = 1024
    response_hint: str = "free_text"  # free_text | schema_constrained

    def validate(self) -> None:
        if not self.messages:
            raise GatewayError("request must carry at least one message")
        for role, _ in self.messages:
            if role not in ("system", "user", "assistant", "tool"):
                raise GatewayError(f"invalid role: {role}")


def _token_count(text: str) -> int:
    return max(1, len(text.split()))


# ---------------------------------------------------------------------------
# Mock backends (pure functions of their inputs)


def tokenize_words(text: str) -> list[str]:
    return text.lower().split()


class MockEmbedder:
    """Hashed bag-of-tokens embedding: deterministic, cosine tracks token
    overlap, dimension EMBED_DIM, unit norm."""

    def __init__(self, dim: int = EMBED_DIM):
        self.dim = dim

    def _bucket(self, token: str) -> int:
        h = hashlib.sha1(token.encode("utf-8")).digest()
        return int.from_bytes(h[:4], "big") % self.dim

    def embed(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            for tok in tokenize_words(text):
                out[i, self._bucket(tok)] += 1.0
            norm = np.linalg.norm(out[i])
            if norm == 0.0:
                out[i, 0] = 1.0
            else:
                out[i] /= norm
        return out


class ScriptedGenerator:
    """FIFO queue of canned responses, with an optional template fallback.

    Agent and retriever tests enqueue one string per expected model turn.
    """

    def __init__(self, responses: list[str] | None = None,
                 fallback=None):
        self.queue: deque[str] = deque(responses or [])
        self.fallback = fallback

    def push(self, *responses: str) -> None:
        self.queue.extend(responses)

    def generate(self, req: GenerationRequest) -> str:
        if self.queue:
            return self.queue.popleft()
        if self.fallback is not None:
            return self.fallback(req)
        return ""


class OverlapScorer:
    """Mock reranker: score = count of shared lowercase tokens."""

    def score_pairs(self, query: str, passages: list[str]) -> list[float]:
        q = set(tokenize_words(query))
        return [float(sum(1 for t in tokenize_words(p) if t in q)) for p in passages]


# ---------------------------------------------------------------------------
# HTTP backends (OpenAI-compatible shapes; exercised only in live profile)


@dataclass
class HttpModelConfig:
    base_url: str
    model: str
    api_key_env: str = "MODEL_API_KEY"
    timeout: float = 60.0
    max_retries: int = 3
    backoff_base: float = 0.25


class HttpBackend:
    """Chat-completion + embedding client for provider-agnostic endpoints."""

    def __init__(self, cfg: HttpModelConfig):
        import os

        self.cfg = cfg
        self.api_key = os.environ.get(cfg.api_key_env, "")

    def _post(self, route: str, payload: dict) -> dict:
        import httpx

        last_err: Exception | None = None
        for attempt in range(self.cfg.max_retries):
            try:
                resp = httpx.post(
                    self.cfg.base_url.rstrip("/") + route,
                    json=payload,
                    headers={"Authorization": f"Bearer {self.api_key}"},
                    timeout=self.cfg.timeout,
                )
                resp.raise_for_status()
                return resp.json()
            except Exception as e:  # noqa: BLE001 - provider errors are opaque
                last_err = e
                time.sleep(self.cfg.backoff_base * (2**attempt))
        raise GatewayError(f"provider failure after {self.cfg.max_retries} retries: {last_err}")

    def embed(self, texts: list[str]) -> np.ndarray:
        data = self._post("/embeddings", {"model": self.cfg.model, "input": texts})
        vecs = np.array([d["embedding"] for d in data["data"]], dtype=np.float64)
        norms = np.linalg.norm(vecs, axis=1, keepdims=True)
        return vecs / np.where(norms == 0, 1.0, norms)

    def generate(self, req: GenerationRequest) -> str:
        data = self._post(
            "/chat/completions",
            {
                "model": self.cfg.model,
                "messages": [{"role": r, "content": c} for r, c in req.messages],
                "temperature": req.temperature,
                "max_tokens": req.max_tokens,
            },
        )
        return data["choices"][0]["message"]["content"]

    def score_pairs(self, query: str, passages: list[str]) -> list[float]:
        data = self._post("/rerank", {"model": self.cfg.model, "query": query,
                                      "documents": passages})
        scores = [0.0] * len(passages)
        for item in data["results"]:
            scores[item["index"]] = float(item["relevance_score"])
        return scores


class DisabledBackend:
    """Placeholder wired in the fixture profile for any role configured as
    http: invoking it is a test-setup bug, surfaced loudly."""

    def __init__(self, role: str):
        self.role = role

    def _raise(self, *_a, **_k):
        raise NoNetworkError(f"no-network backend invoked for role {self.role!r}")

    embed = generate = score_pairs = _raise


# ---------------------------------------------------------------------------
# Gateway


@dataclass
class ModelGateway:
    """Routes embedding / generation / judging / reranking to per-role backends
    and meters usage. Thread-safe for concurrent sessions."""

    embedder: object = field(default_factory=MockEmbedder)
    generator: object = field(default_factory=ScriptedGenerator)
    judge: object | None = None
    reranker: object = field(default_factory=OverlapScorer)
    usage: UsageMeter = field(default_factory=UsageMeter)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if self.judge is None:
            self.judge = self.generator

    def embed(self, texts: list[str]) -> np.ndarray:
        for t in texts:
            if not t.strip():
                raise GatewayError("cannot embed empty text")
        t0 = time.monotonic()
        vecs = self.embedder.embed(texts)
        delta = UsageMeter(
            in_tokens=sum(_token_count(t) for t in texts),
            wall_time=time.monotonic() - t0,
        )
        with self._lock:
            self.usage.add(delta)
        return vecs

    def generate(self, req: GenerationRequest, role: str = "generator") -> tuple[str, UsageMeter]:
        req.validate()
        backend = self.judge if role == "judge" else self.generator
        t0 = time.monotonic()
        text = backend.generate(req)
        delta = UsageMeter(
            in_tokens=sum(_token_count(c) for _, c in req.messages),
            out_tokens=_token_count(text) if text else 0,
            wall_time=time.monotonic() - t0,
        )
        with self._lock:
            self.usage.add(delta)
        return text, delta

    def score_pairs(self, query: str, passages: list[str]) -> list[float]:
        if not passages:
            return []
        t0 = time.monotonic()
        scores = self.reranker.score_pairs(query, passages)
        delta = UsageMeter(
            in_tokens=_token_count(query) + sum(_token_count(p) for p in passages),
            wall_time=time.monotonic() - t0,
        )
        with self._lock:
            self.usage.add(delta)
        return scores


def fixture_gateway(responses: list[str] | None = None) -> ModelGateway:
    """Standard offline gateway used across tests and the fixture profile."""
    return ModelGateway(
        embedder=MockEmbedder(),
        generator=ScriptedGenerator(responses),
        reranker=OverlapScorer(),
    )
