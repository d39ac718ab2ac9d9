"""Iterative tool-calling agent loop.

An episode seeds its history with the hybrid retrieval context, then
alternates: render history -> ask the model for a structured plan ->
dispatch requested tools -> fold results back in -> repeat, until the model
returns no tool calls and a user-facing answer, or a budget runs out.
"""

from __future__ import annotations

import json
import re
import uuid
from dataclasses import dataclass, field
from typing import Callable

from .gateway import GenerationRequest, ModelGateway
from .index.store import HybridIndex
from .prompts import AGENT_SYSTEM_PROMPT
from .retriever import ContextSet, RetrievalConfig, retrieve
from .tools.registry import ToolParam, ToolRegistry, ToolResult, ToolSpec

DEFAULT_MAX_ITERATIONS = 8
DEFAULT_MAX_TOOL_CALLS = 16
DEFAULT_MAX_HISTORY_CHARS = 60_000

NO_CLARIFICATION = "no clarification available"


@dataclass
class MetaPlan:
    thought: str = ""
    tool_calls: list[dict] = field(default_factory=list)
    audio: str = ""
    plan: str = ""
    queries: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "thought": self.thought,
            "tool_calls": self.tool_calls,
            "audio": self.audio,
            "plan": self.plan,
            "queries": self.queries,
        }


@dataclass
class ParseFailure:
    raw: str
    error: str


_FENCE_RE = re.compile(r"```(?:json)?\s*(.*?)\s*```", re.DOTALL)


def parse_meta_plan(raw: str) -> MetaPlan | ParseFailure:
    """Parse a model turn into a plan. Tolerates code fences and surrounding
    prose; surrounding prose outside the fence is folded into audio if the
    plan itself left audio empty."""
    text = raw.strip()
    prose_around = ""
    m = _FENCE_RE.search(text)
    if m:
        prose_around = (text[: m.start()] + text[m.end():]).strip()
        text = m.group(1)
    start = text.find("{")
    if start == -1:
        return ParseFailure(raw, "no JSON object found")
    # widest balanced slice first, then narrow
    end = text.rfind("}")
    obj = None
    while end > start:
        try:
            obj = json.loads(text[start : end + 1])
            break
        except json.JSONDecodeError:
            end = text.rfind("}", start, end)
    if obj is None or not isinstance(obj, dict):
        return ParseFailure(raw, "unparseable JSON object")

    tool_calls = obj.get("tool_calls", [])
    if not isinstance(tool_calls, list):
        return ParseFailure(raw, "tool_calls must be a list")
    for call in tool_calls:
        if not isinstance(call, dict) or "name" not in call:
            return ParseFailure(raw, f"bad tool call: {call!r}")
        call.setdefault("args", {})
    queries = obj.get("queries", [])
    if not isinstance(queries, list):
        queries = []
    return MetaPlan(
        thought=str(obj.get("thought", "")),
        tool_calls=tool_calls,
        audio=str(obj.get("audio", "")) or prose_around,
        plan=str(obj.get("plan", "")),
        queries=[q for q in queries if isinstance(q, dict) and "query" in q],
    )


@dataclass
class Budgets:
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    max_tool_calls: int = DEFAULT_MAX_TOOL_CALLS
    max_history_chars: int = DEFAULT_MAX_HISTORY_CHARS


@dataclass
class AgentState:
    session_id: str = field(default_factory=lambda: uuid.uuid4().hex)
    history: list[dict] = field(default_factory=list)
    iteration: int = 0
    tool_calls_used: int = 0
    budgets: Budgets = field(default_factory=Budgets)
    event_sink: Callable[[dict], None] | None = None

    def append(self, event: dict) -> None:
        self.history.append(event)
        if self.event_sink is not None:
            self.event_sink(event)


@dataclass
class EpisodeResult:
    answer: str
    confident: bool
    context: ContextSet
    state: AgentState
    plan: MetaPlan | None = None


def dispatch_tools(calls: list[dict], registry: ToolRegistry) -> list[ToolResult]:
    """Run tool calls in order; bad calls yield error results, never raise."""
    return [registry.invoke(call.get("name", ""), call.get("args", {}) or {})
            for call in calls]


def _render_history(state: AgentState, roster: str) -> list[tuple[str, str]]:
    """History -> chat messages, truncating oldest tool payloads first when
    over budget. The user query and initial context are never dropped."""
    messages: list[tuple[str, str]] = [
        ("system", AGENT_SYSTEM_PROMPT.format(tool_roster=roster))
    ]
    body: list[tuple[str, str]] = []
    for ev in state.history:
        kind = ev["type"]
        if kind == "user_query":
            body.append(("user", f"Question: {ev['text']}"))
        elif kind == "retrieved_context":
            lines = [
                f"[{c['chunk_id']}] ({c['kind']}) {c['text']}" for c in ev["chunks"]
            ]
            body.append(("user", "Retrieved context:\n" + "\n".join(lines)))
        elif kind == "meta_plan":
            body.append(("assistant", json.dumps(ev["plan"], sort_keys=True)))
        elif kind == "tool_result":
            body.append(("tool", json.dumps(ev["result"], sort_keys=True)))
        elif kind == "clarification_request":
            body.append(("assistant", f"Clarification needed: {ev['question']}"))
        elif kind == "clarification_answer":
            body.append(("user", f"Clarification: {ev['text']}"))
        elif kind == "parse_error":
            body.append(("user", f"Your last reply was not valid JSON ({ev['error']}). "
                                 "Reply again with only the JSON object."))

    budget = state.budgets.max_history_chars
    total = sum(len(c) for _, c in body)
    if total > budget:
        # truncate oldest tool payloads first; query and seed context stay
        trimmed = list(body)
        for i, (role, content) in enumerate(trimmed):
            if total <= budget:
                break
            if role == "tool":
                total -= len(content) - len("[tool output truncated]")
                trimmed[i] = (role, "[tool output truncated]")
        body = trimmed
    return messages + body


class Agent:
    """Binds the retriever, toolset, and gateway together for one corpus."""

    def __init__(self, index: HybridIndex, registry: ToolRegistry,
                 gateway: ModelGateway,
                 retrieval_cfg: RetrievalConfig | None = None,
                 clarifier: Callable[[str], str] | None = None):
        self.index = index
        self.registry = registry
        self.gateway = gateway
        self.retrieval_cfg = retrieval_cfg or RetrievalConfig()
        self.clarifier = clarifier  # None -> batch auto-responder
        self._register_builtin_tools()

    def _register_builtin_tools(self) -> None:
        if "retrieve_documents" not in self.registry:
            self.registry.register(
                ToolSpec(
                    name="retrieve_documents",
                    description="Run another hybrid retrieval pass over the corpus with a refined query.",
                    params=(ToolParam("query", "string"),),
                ),
                self._retrieve_tool,
            )
        if "ask_user" not in self.registry:
            self.registry.register(
                ToolSpec(
                    name="ask_user",
                    description="Ask the user one clarifying question and wait for the reply.",
                    params=(ToolParam("question", "string"),),
                ),
                lambda question: {"unreachable": True},  # routed in-loop, see answer_query
            )

    def _retrieve_tool(self, query: str) -> dict:
        ctx = retrieve(query, self.retrieval_cfg, self.index, self.gateway)
        return {
            "chunks": [
                {"chunk_id": c.chunk_id, "kind": c.kind, "score": s, "text": c.text}
                for c, s, _src in ctx.chunks
            ]
        }

    def request_clarification(self, question: str, state: AgentState) -> ToolResult:
        """Emit a clarification request and resolve it through the session's
        clarifier (interactive) or the batch auto-responder."""
        state.append({"type": "clarification_request", "question": question})
        if self.clarifier is not None:
            try:
                answer = self.clarifier(question)
            except TimeoutError:
                answer = NO_CLARIFICATION
        else:
            answer = NO_CLARIFICATION
        state.append({"type": "clarification_answer", "text": answer})
        return ToolResult("ask_user", {"question": question}, ok=True,
                          payload={"answer": answer})

    def answer_query(self, q: str, state: AgentState | None = None) -> EpisodeResult:
        state = state or AgentState()
        state.append({"type": "user_query", "text": q})

        ctx = retrieve(q, self.retrieval_cfg, self.index, self.gateway)
        state.append({
            "type": "retrieved_context",
            "chunks": [
                {"chunk_id": c.chunk_id, "doc_id": c.doc_id, "kind": c.kind,
                 "score": s, "source": src, "text": c.text}
                for c, s, src in ctx.chunks
            ],
            "trace": ctx.to_trace_dict(),
        })

        roster = self.registry.roster_text()
        last_plan: MetaPlan | None = None
        repaired = False

        while state.iteration < state.budgets.max_iterations:
            state.iteration += 1
            raw, _ = self.gateway.generate(
                GenerationRequest(
                    messages=_render_history(state, roster),
                    response_hint="schema_constrained",
                ),
                role="generator",
            )
            plan = parse_meta_plan(raw)
            if isinstance(plan, ParseFailure):
                if not repaired:
                    repaired = True
                    state.append({"type": "parse_error", "error": plan.error})
                    continue
                # second failure: treat the raw text as a free-text final answer
                answer = plan.raw.strip() or "I could not produce an answer."
                state.append({"type": "final_answer", "text": answer,
                              "confident": False, "note": "unparseable plan"})
                return EpisodeResult(answer, False, ctx, state, None)
            repaired = False
            last_plan = plan
            state.append({"type": "meta_plan", "plan": plan.to_dict()})

            if not plan.tool_calls and plan.audio.strip():
                state.append({"type": "final_answer", "text": plan.audio,
                              "confident": True})
                return EpisodeResult(plan.audio, True, ctx, state, plan)

            for call in plan.tool_calls:
                if state.tool_calls_used >= state.budgets.max_tool_calls:
                    state.append({"type": "tool_result", "result": {
                        "tool_name": call.get("name", ""), "args": call.get("args", {}),
                        "ok": False, "payload": None,
                        "error": "tool-call budget exhausted", "latency": 0.0}})
                    continue
                state.tool_calls_used += 1
                name = call.get("name", "")
                if name == "ask_user":
                    result = self.request_clarification(
                        str(call.get("args", {}).get("question", q)), state)
                else:
                    result = self.registry.invoke(name, call.get("args", {}) or {})
                state.append({"type": "tool_result", "result": result.to_dict()})

        answer = self._exhausted_answer(last_plan)
        state.append({"type": "final_answer", "text": answer, "confident": False,
                      "note": "iteration budget exhausted"})
        return EpisodeResult(answer, False, ctx, state, last_plan)

    @staticmethod
    def _exhausted_answer(plan: MetaPlan | None) -> str:
        parts = ["I could not fully answer within the allotted steps."]
        if plan is not None:
            found = [f"- {s.get('query')}: {s.get('answer')}"
                     for s in plan.queries if s.get("answer")]
            if found:
                parts.append("Partial findings:\n" + "\n".join(found))
            elif plan.audio.strip():
                parts.append("Best partial answer: " + plan.audio)
        return "\n".join(parts)
