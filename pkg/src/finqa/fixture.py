"""Deterministic template model backend for the fixture profile.

Recognizes the pipeline's own prompt templates and answers them with pure
functions of the prompt text, so whole-pipeline runs are reproducible without
a model or network.
"""

from __future__ import annotations

import re

from .gateway import GenerationRequest


def _last_user_content(req: GenerationRequest) -> str:
    for role, content in reversed(req.messages):
        if role == "user":
            return content
    return req.messages[-1][1]


_QUESTION_RE = re.compile(r"Question: (.*)", re.DOTALL)
_CHUNK_REF_RE = re.compile(r"\[([^\]\s]+:\d+)\]")
_AMBIGUOUS_TIME_RE = re.compile(r"\b(latest|most recent|current)\b", re.IGNORECASE)
_YEAR_RE = re.compile(r"\b(19|20)\d\d\b")


class TemplateModelBackend:
    """Answers fanout, hypothetical, judge, and agent prompts from templates."""

    def generate(self, req: GenerationRequest) -> str:
        content = _last_user_content(req)
        system = req.messages[0][1] if req.messages[0][0] == "system" else ""

        if "You generate search queries" in content:
            return self._fanout(content)
        if "Write a short passage" in content:
            return self._hypothetical(content)
        if "atomic factual claims" in content:
            return self._claims(content)
        if 'answer "yes" if it is supported' in content:
            return self._support(content)
        if "single JSON object" in system:
            return self._agent_turn(req)
        return ""

    def _question(self, content: str) -> str:
        m = _QUESTION_RE.search(content)
        return (m.group(1).strip() if m else content).splitlines()[0].strip()

    def _fanout(self, content: str) -> str:
        q = self._question(content)
        m = re.search(r"write (\d+) additional queries", content)
        n = int(m.group(1)) if m else 2
        stems = [
            f"{q} exact figures",
            f"{q} year over year change",
            f"related risks and investigations for {q}",
            f"{q} reported values by fiscal year",
            f"{q} supporting table",
            f"{q} context",
            f"{q} breakdown",
        ]
        return "\n".join(stems[:n])

    def _hypothetical(self, content: str) -> str:
        q = self._question(content)
        return (f"{q} The figure was 45.45 in 2014 compared with 40.13 in 2013, "
                f"a change of 13.25% for the period.")

    def _claims(self, content: str) -> str:
        text = content.split("Text:", 1)[-1]
        return "\n".join(s.strip() for s in re.split(r"(?<=[.!?])\s+", text) if s.strip())

    def _support(self, content: str) -> str:
        ctx = content.split("Context:", 1)[-1].split("Claims:", 1)[0].lower()
        claims = content.split("Claims:", 1)[-1]
        out = []
        for line in claims.splitlines():
            line = re.sub(r"^\s*\d+\.\s*", "", line).strip()
            if line:
                out.append("yes" if line.lower().rstrip(".") in ctx else "no")
        return "\n".join(out)

    def _agent_turn(self, req: GenerationRequest) -> str:
        """Cite the top retrieved chunk and answer from it. Questions with an
        ambiguous time reference and no explicit year ask one clarification
        first, so interactive flows are exercisable offline."""
        question, context_line, chunk_id, clarification = "", "", "", ""
        for role, content in req.messages:
            if role == "user" and content.startswith("Question:"):
                question = content.removeprefix("Question:").strip()
            if role == "user" and content.startswith("Retrieved context:"):
                lines = content.splitlines()
                if len(lines) > 1:
                    context_line = lines[1]
                    m = _CHUNK_REF_RE.search(context_line)
                    chunk_id = m.group(1) if m else ""
            if role == "user" and content.startswith("Clarification:"):
                clarification = content.removeprefix("Clarification:").strip()
        import json

        if (_AMBIGUOUS_TIME_RE.search(question) and not _YEAR_RE.search(question)
                and not clarification):
            return json.dumps({
                "thought": "The question does not pin down a fiscal year.",
                "tool_calls": [{"name": "ask_user",
                                "args": {"question": "Which fiscal year should I use?"}}],
                "audio": "",
                "plan": "Ask for the fiscal year, then answer from the context.",
                "queries": [{"query": question, "answer": ""}],
            })
        if context_line:
            audio = (f"Based on the retrieved context [{chunk_id}]: "
                     f"{context_line.split(') ', 1)[-1]}")
        else:
            audio = ("No grounded context was retrieved for this question, "
                     "so I cannot give a confident answer.")
        if clarification and clarification != "no clarification available":
            audio = f"(for {clarification}) {audio}"
        return json.dumps({
            "thought": f"Answering from the top retrieved chunk for: {question}",
            "tool_calls": [],
            "audio": audio,
            "plan": "Answer directly from the initial retrieval.",
            "queries": [{"query": question, "answer": audio}],
        })
