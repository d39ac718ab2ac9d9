"""Service configuration: file schema, profiles, gateway construction."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .agent import Budgets
from .gateway import (
    EMBED_DIM,
    HttpBackend,
    HttpModelConfig,
    MockEmbedder,
    ModelGateway,
    OverlapScorer,
)
from .fixture import TemplateModelBackend
from .retriever import RetrievalConfig


class ConfigError(Exception):
    pass


@dataclass
class ModelRole:
    backend: str = "mock"  # mock | http
    base_url: str = ""
    model: str = ""
    api_key_env: str = "MODEL_API_KEY"


@dataclass
class ServiceConfig:
    profile: str = "fixture"  # fixture | live
    corpus_paths: list[str] = field(default_factory=list)
    corpus_format: str = "jsonl"
    index_mode: str = "exact"  # exact | hnsw
    embed_dim: int = EMBED_DIM
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    budgets: Budgets = field(default_factory=Budgets)
    models: dict[str, ModelRole] = field(default_factory=dict)
    snapshot_path: str = ""

    def __post_init__(self):
        for role in ("embedding", "generator", "judge", "reranker"):
            self.models.setdefault(role, ModelRole())
        if self.profile == "fixture":
            bad = [r for r, m in self.models.items() if m.backend != "mock"]
            if bad:
                raise ConfigError(
                    f"fixture profile forbids network backends, got http for {bad}"
                )
        elif self.profile != "live":
            raise ConfigError(f"unknown profile {self.profile!r}")

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ServiceConfig":
        models = {
            role: ModelRole(**spec)
            for role, spec in (raw.get("models") or {}).items()
        }
        retrieval = RetrievalConfig(**(raw.get("retrieval") or {}))
        budgets = Budgets(**(raw.get("budgets") or {}))
        return cls(
            profile=raw.get("profile", "fixture"),
            corpus_paths=list(raw.get("corpus_paths") or []),
            corpus_format=raw.get("corpus_format", "jsonl"),
            index_mode=raw.get("index_mode", "exact"),
            embed_dim=raw.get("embed_dim", EMBED_DIM),
            retrieval=retrieval,
            budgets=budgets,
            models=models,
            snapshot_path=raw.get("snapshot_path", ""),
        )

    def build_gateway(self) -> ModelGateway:
        if self.profile == "fixture":
            return ModelGateway(
                embedder=MockEmbedder(dim=self.embed_dim),
                generator=TemplateModelBackend(),
                reranker=OverlapScorer(),
            )

        def backend(role: str, default):
            spec = self.models[role]
            if spec.backend == "mock":
                return default
            if spec.backend == "http":
                return HttpBackend(HttpModelConfig(
                    base_url=spec.base_url, model=spec.model,
                    api_key_env=spec.api_key_env,
                ))
            raise ConfigError(f"unknown backend {spec.backend!r} for {role}")

        return ModelGateway(
            embedder=backend("embedding", MockEmbedder(dim=self.embed_dim)),
            generator=backend("generator", TemplateModelBackend()),
            judge=backend("judge", TemplateModelBackend()),
            reranker=backend("reranker", OverlapScorer()),
        )
