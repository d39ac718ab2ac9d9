"""Metric formulas over claim labels, plus cosine and ROUGE scoring.

The arithmetic layer is deliberately separate from claim labeling: judges
produce labels, these functions only do the math, so swapping judge backends
cannot change the formulas.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from ..gateway import GenerationRequest, ModelGateway
from ..index.sparse import tokenize
from ..prompts import CLAIM_EXTRACTION_PROMPT, CLAIM_SUPPORT_PROMPT


@dataclass
class QARecord:
    question: str
    answer: str  # reference
    context: str = ""
    ticker: str = ""
    filed_on: str = ""
    doc_ids: list[str] = field(default_factory=list)

    @classmethod
    def from_json(cls, rec: dict) -> "QARecord":
        return cls(
            question=rec["question"],
            answer=rec.get("answer", ""),
            context=rec.get("context", ""),
            ticker=rec.get("ticker", ""),
            filed_on=rec.get("filed on", rec.get("filed_on", "")),
            doc_ids=list(rec.get("doc_ids", [])),
        )


@dataclass
class MetricBundle:
    faithfulness: float = 0.0
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    cosine: float = 0.0
    rouge1_f: float = 0.0
    rougeL_f: float = 0.0
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "faithfulness": round(self.faithfulness, 6),
            "precision": round(self.precision, 6),
            "recall": round(self.recall, 6),
            "f1": round(self.f1, 6),
            "cosine": round(self.cosine, 6),
            "rouge1_f": round(self.rouge1_f, 6),
            "rougeL_f": round(self.rougeL_f, 6),
            "flags": self.flags,
        }


# ---------------------------------------------------------------------------
# Judges


def _normalize(text: str) -> str:
    return " ".join(text.lower().split())


# split at sentence punctuation followed by whitespace, so decimals like
# 45.45 stay inside one claim
_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+|\n+")


class MockJudge:
    """Deterministic judge: sentence-split claims, normalized substring
    support check. Keeps the whole eval pipeline offline."""

    def extract_claims(self, text: str) -> list[str]:
        claims, seen = [], set()
        for piece in _SENTENCE_SPLIT_RE.split(text):
            s = piece.strip()
            key = _normalize(s).rstrip(".!?")
            if s and key and key not in seen:
                seen.add(key)
                claims.append(s)
        return claims

    def supported(self, claims: list[str], context: str) -> list[bool]:
        ctx = _normalize(context)
        return [_normalize(c).rstrip(".!?") in ctx for c in claims]


class LlmJudge:
    """Judge backed by the gateway's judge model."""

    def __init__(self, gateway: ModelGateway):
        self.gateway = gateway

    def extract_claims(self, text: str) -> list[str]:
        if not text.strip():
            return []
        out, _ = self.gateway.generate(
            GenerationRequest(messages=[("user", CLAIM_EXTRACTION_PROMPT.format(text=text))]),
            role="judge",
        )
        claims, seen = [], set()
        for line in out.splitlines():
            line = line.strip().lstrip("-*0123456789. ").strip()
            key = _normalize(line)
            if line and key not in seen:
                seen.add(key)
                claims.append(line)
        return claims

    def supported(self, claims: list[str], context: str) -> list[bool]:
        if not claims:
            return []
        numbered = "\n".join(f"{i+1}. {c}" for i, c in enumerate(claims))
        out, _ = self.gateway.generate(
            GenerationRequest(messages=[
                ("user", CLAIM_SUPPORT_PROMPT.format(context=context, claims=numbered))
            ]),
            role="judge",
        )
        labels = [ln.strip().lower().startswith("y") for ln in out.splitlines() if ln.strip()]
        labels += [False] * (len(claims) - len(labels))
        return labels[: len(claims)]


# ---------------------------------------------------------------------------
# Metric operations


def extract_claims(text: str, judge) -> list[str]:
    if not text.strip():
        return []
    return judge.extract_claims(text)


def faithfulness(answer: str, context: str, judge) -> float:
    """Supported claims / total claims in the answer; 0 when claimless."""
    claims = extract_claims(answer, judge)
    if not claims:
        return 0.0
    labels = judge.supported(claims, context)
    return sum(labels) / len(claims)


def factual_correctness(answer: str, reference: str, judge) -> dict:
    """Claim-overlap precision/recall/F1 between answer and reference."""
    answer_claims = extract_claims(answer, judge)
    reference_claims = extract_claims(reference, judge)
    in_ref = judge.supported(answer_claims, reference)
    in_ans = judge.supported(reference_claims, answer)
    tp = sum(in_ref)
    fp = len(answer_claims) - tp
    fn = len(reference_claims) - sum(in_ans)
    precision = tp / (tp + fp) if (tp + fp) else 0.0
    recall = tp / (tp + fn) if (tp + fn) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return {"precision": precision, "recall": recall, "f1": f1,
            "tp": tp, "fp": fp, "fn": fn}


def cosine_score(answer: str, reference: str, gateway: ModelGateway) -> float:
    vecs = gateway.embed([answer, reference])
    return float(np.dot(vecs[0], vecs[1]))


def _lcs_len(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def _f_measure(match: int, n_pred: int, n_ref: int) -> float:
    if match == 0 or n_pred == 0 or n_ref == 0:
        return 0.0
    p, r = match / n_pred, match / n_ref
    return 2 * p * r / (p + r)


def rouge_score(answer: str, reference: str) -> dict:
    """ROUGE-1 and ROUGE-L F-measures on the numeric-preserving tokenizer."""
    a, r = tokenize(answer), tokenize(reference)
    from collections import Counter

    ca, cr = Counter(a), Counter(r)
    overlap = sum(min(ca[t], cr[t]) for t in ca)
    return {
        "rouge1_f": _f_measure(overlap, len(a), len(r)),
        "rougeL_f": _f_measure(_lcs_len(a, r), len(a), len(r)),
    }


_NUM_RE = re.compile(r"\d+(?:[.,]\d+)*")


def numeric_matches(answer: str, reference: str, rel_tol: float = 0.005) -> list[tuple[str, str]]:
    """Pairs of numeric tokens equal within rel_tol. Flags answers that are
    numerically right but textually different from the reference."""

    def values(text: str) -> list[tuple[str, float]]:
        out = []
        for tok in _NUM_RE.findall(text):
            try:
                out.append((tok, float(tok.replace(",", ""))))
            except ValueError:
                continue
        return out

    matches = []
    ref_vals = values(reference)
    for tok_a, va in values(answer):
        for tok_r, vr in ref_vals:
            denom = max(abs(va), abs(vr))
            if denom == 0 or abs(va - vr) / denom <= rel_tol:
                matches.append((tok_a, tok_r))
                break
    return matches


# ---------------------------------------------------------------------------
# Human evaluation rollup


@dataclass(frozen=True)
class HumanJudgment:
    record_id: str
    verdict: str  # correct | incorrect | refused
    confident: bool
    credit: float | None = None  # fractional credit for multi-part questions

    def __post_init__(self):
        if self.verdict not in ("correct", "incorrect", "refused"):
            raise ValueError(f"bad verdict {self.verdict!r}")
        if self.verdict == "refused" and self.confident:
            raise ValueError("a refused answer cannot be confident")
        if self.credit is not None and not 0.0 <= self.credit <= 1.0:
            raise ValueError("credit must lie in [0, 1]")

    @property
    def score(self) -> float:
        if self.credit is not None:
            return self.credit
        return 1.0 if self.verdict == "correct" else 0.0


def human_eval_rollup(judgments: list[HumanJudgment]) -> dict:
    """Accuracy A, reliability R, hallucination rate HR = A/R - A."""
    if not judgments:
        raise ValueError("no judgments")
    a = sum(j.score for j in judgments) / len(judgments)
    confident = [j for j in judgments if j.confident]
    if confident:
        r = sum(j.score for j in confident) / len(confident)
    else:
        r = None
    hr = (a / r - a) if r else None
    return {"A": a, "R": r, "HR": hr, "refused": sum(j.verdict == "refused" for j in judgments),
            "total": len(judgments)}


def metric_bundle(answer: str, record: QARecord, judge, gateway: ModelGateway,
                  numeric_rel_tol: float = 0.005) -> MetricBundle:
    fc = factual_correctness(answer, record.answer, judge)
    bundle = MetricBundle(
        faithfulness=faithfulness(answer, record.context, judge),
        precision=fc["precision"],
        recall=fc["recall"],
        f1=fc["f1"],
        cosine=cosine_score(answer, record.answer, gateway) if answer.strip() else 0.0,
        **rouge_score(answer, record.answer),
    )
    if numeric_matches(answer, record.answer, numeric_rel_tol):
        bundle.flags.append("numeric_match")
    return bundle
