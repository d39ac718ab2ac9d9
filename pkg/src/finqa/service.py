"""HTTP service: ingestion, one-shot query, interactive sessions with
clarification events, all over the fixture or live profile."""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .agent import Agent, AgentState, NO_CLARIFICATION
from .config import ServiceConfig
from .gateway import ModelGateway
from .index.store import HybridIndex
from .ingest import ChunkingConfig, chunk_document, load_corpus, _document_from_record
from .tools.builtin import build_registry

CLARIFICATION_TIMEOUT = 30.0


@dataclass
class Session:
    session_id: str
    created_at: str
    events: list[dict] = field(default_factory=list)
    pending_question: str | None = None
    _answer: str | None = None
    status: str = "open"
    cond: threading.Condition = field(default_factory=threading.Condition)

    def envelope(self) -> dict:
        return {
            "session_id": self.session_id,
            "created_at": self.created_at,
            "status": self.status,
            "cursor": len(self.events),
        }

    def append(self, event: dict) -> None:
        with self.cond:
            self.events.append({"cursor": len(self.events), **event})
            self.cond.notify_all()

    def wait_events(self, cursor: int, timeout: float) -> list[dict]:
        deadline = time.monotonic() + timeout
        with self.cond:
            while len(self.events) <= cursor:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    break
                self.cond.wait(remaining)
            return self.events[cursor:]


class IngestBody(BaseModel):
    path: str | None = None
    format: str = "jsonl"
    docs: list[dict] | None = None


class QueryBody(BaseModel):
    question: str
    n_queries: int | None = None
    k_final: int | None = None


class MessageBody(BaseModel):
    text: str


class ClarificationBody(BaseModel):
    text: str


class AppState:
    def __init__(self, cfg: ServiceConfig, gateway: ModelGateway | None = None,
                 clarification_timeout: float = CLARIFICATION_TIMEOUT):
        self.cfg = cfg
        self.gateway = gateway or cfg.build_gateway()
        self.index = HybridIndex(dim=cfg.embed_dim, mode=cfg.index_mode)
        self.sessions: dict[str, Session] = {}
        self.clarification_timeout = clarification_timeout
        self.chunking = ChunkingConfig()
        self._ingest_lock = threading.Lock()
        self.traces: dict[str, dict] = {}

    def ingest_documents(self, docs) -> dict:
        with self._ingest_lock:
            n_chunks = 0
            for doc in docs:
                self.index.remove_document(doc.doc_id)
                chunks = chunk_document(doc, self.chunking)
                if chunks:
                    vectors = self.gateway.embed([c.text for c in chunks])
                    self.index.upsert_chunks(chunks, vectors)
                n_chunks += len(chunks)
            return {"documents": len(list(docs)), "chunks": n_chunks}

    def make_agent(self, clarifier=None) -> Agent:
        return Agent(
            self.index, build_registry(), self.gateway,
            retrieval_cfg=self.cfg.retrieval, clarifier=clarifier,
        )


def create_app(cfg: ServiceConfig | None = None,
               gateway: ModelGateway | None = None,
               clarification_timeout: float = CLARIFICATION_TIMEOUT) -> FastAPI:
    cfg = cfg or ServiceConfig()
    state = AppState(cfg, gateway, clarification_timeout)
    app = FastAPI(title="finqa")
    app.state.finqa = state

    for path in cfg.corpus_paths:
        state.ingest_documents(load_corpus(path, cfg.corpus_format))

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "index": state.index.stats()}

    @app.post("/ingest")
    def ingest(body: IngestBody):
        if body.path:
            try:
                docs = load_corpus(body.path, body.format)
            except Exception as e:  # noqa: BLE001
                raise HTTPException(status_code=400, detail=str(e))
        elif body.docs is not None:
            try:
                docs = [_document_from_record(rec, f"inline:{i}")
                        for i, rec in enumerate(body.docs)]
            except Exception as e:  # noqa: BLE001
                raise HTTPException(status_code=400, detail=str(e))
        else:
            raise HTTPException(status_code=400, detail="need path or docs")
        return state.ingest_documents(docs)

    @app.delete("/documents/{doc_id}")
    def delete_document(doc_id: str):
        return {"removed_chunks": state.index.remove_document(doc_id)}

    @app.post("/query")
    def query(body: QueryBody):
        if not body.question.strip():
            raise HTTPException(status_code=400, detail="empty question")
        agent = state.make_agent(clarifier=None)  # batch auto-responder
        if body.n_queries:
            agent.retrieval_cfg.n_queries = body.n_queries
        if body.k_final:
            agent.retrieval_cfg.k_final = body.k_final
        result = agent.answer_query(body.question, AgentState(budgets=cfg.budgets))
        trace_id = uuid.uuid4().hex
        state.traces[trace_id] = {"events": result.state.history}
        return {
            "answer": result.answer,
            "confident": result.confident,
            "citations": [
                {"chunk_id": c.chunk_id, "doc_id": c.doc_id, "kind": c.kind,
                 "score": s, "source": src}
                for c, s, src in result.context.chunks
            ],
            "trace_id": trace_id,
        }

    @app.get("/traces/{trace_id}")
    def get_trace(trace_id: str):
        if trace_id not in state.traces:
            raise HTTPException(status_code=404, detail="unknown trace")
        return state.traces[trace_id]

    @app.post("/sessions", status_code=201)
    def create_session():
        session = Session(
            session_id=uuid.uuid4().hex,
            created_at=datetime.now(timezone.utc).isoformat(),
        )
        state.sessions[session.session_id] = session
        return session.envelope()

    def _get_session(session_id: str) -> Session:
        session = state.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session

    @app.post("/sessions/{session_id}/messages", status_code=202)
    def post_message(session_id: str, body: MessageBody):
        session = _get_session(session_id)
        if session.status == "awaiting_clarification":
            raise HTTPException(status_code=409, detail="clarification pending")
        if not body.text.strip():
            raise HTTPException(status_code=400, detail="empty message")

        def clarifier(question: str) -> str:
            with session.cond:
                session.pending_question = question
                session._answer = None
                session.status = "awaiting_clarification"
            deadline = time.monotonic() + state.clarification_timeout
            with session.cond:
                while session._answer is None:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0:
                        break
                    session.cond.wait(remaining)
                answer = session._answer
                session.pending_question = None
                session._answer = None
                session.status = "open"
            return answer if answer is not None else NO_CLARIFICATION

        def run():
            agent = state.make_agent(clarifier=clarifier)
            agent_state = AgentState(
                session_id=session_id, budgets=cfg.budgets,
                event_sink=session.append,
            )
            try:
                agent.answer_query(body.text, agent_state)
            except Exception as e:  # noqa: BLE001 - surfaced as an event
                session.append({"type": "error", "error": str(e)})
            finally:
                with session.cond:
                    if session.status == "awaiting_clarification":
                        session.status = "open"
                        session.pending_question = None

        threading.Thread(target=run, daemon=True).start()
        return {"accepted": True, "session_id": session_id}

    @app.get("/sessions/{session_id}/events")
    def get_events(session_id: str, cursor: int = 0, wait: float = 0.0):
        session = _get_session(session_id)
        events = session.wait_events(cursor, min(wait, 25.0))
        return {
            "events": events,
            "cursor": cursor + len(events),
            "status": session.status,
            "pending_question": session.pending_question,
        }

    @app.post("/sessions/{session_id}/clarifications")
    def post_clarification(session_id: str, body: ClarificationBody):
        session = _get_session(session_id)
        with session.cond:
            if session.status != "awaiting_clarification":
                raise HTTPException(status_code=409, detail="no clarification pending")
            session._answer = body.text
            session.cond.notify_all()
        return {"accepted": True}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _get_session(session_id).envelope()

    return app
