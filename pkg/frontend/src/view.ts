/** Pure reduction of a cursor-ordered event stream into a render-ready view:
 * chat transcript, pending-clarification gate, trace panel, and the plan /
 * sub-query sidebar. Unknown event kinds are kept as raw payload bubbles,
 * never dropped. */

import { SessionEvent } from "./api.js";

export interface ChatMessage {
  role: "user" | "assistant" | "clarification" | "raw";
  text: string;
  citations?: string[];
  confident?: boolean;
}

export interface Citation {
  chunk_id: string;
  doc_id: string;
  kind: string;
  score: number;
  source: string;
}

export interface TracePanel {
  variants: string[];
  hypotheticals: string[];
  citations: Citation[];
}

export interface SubQuery {
  query: string;
  answer: string;
}

export interface SessionView {
  messages: ChatMessage[];
  pendingQuestion: string | null;
  canSubmit: boolean;
  trace: TracePanel;
  plan: string;
  thought: string;
  queries: SubQuery[];
  warnings: string[];
}

export function renderSession(events: SessionEvent[]): SessionView {
  const view: SessionView = {
    messages: [],
    pendingQuestion: null,
    canSubmit: true,
    trace: { variants: [], hypotheticals: [], citations: [] },
    plan: "",
    thought: "",
    queries: [],
    warnings: [],
  };

  let lastCursor = -1;
  for (const ev of events) {
    if (ev.cursor <= lastCursor) {
      throw new Error(`events out of cursor order at ${ev.cursor}`);
    }
    lastCursor = ev.cursor;
    applyEvent(view, ev);
  }
  view.canSubmit = view.pendingQuestion === null;
  return view;
}

function applyEvent(view: SessionView, ev: SessionEvent): void {
  switch (ev.type) {
    case "user_query":
      view.messages.push({ role: "user", text: String(ev.text) });
      break;
    case "retrieved_context": {
      const chunks = (ev.chunks as Citation[] | undefined) ?? [];
      view.trace.citations = chunks.map((c) => ({
        chunk_id: c.chunk_id,
        doc_id: c.doc_id,
        kind: c.kind,
        score: c.score,
        source: c.source,
      }));
      const trace = ev.trace as { variants?: string[]; hypotheticals?: string[] } | undefined;
      view.trace.variants = trace?.variants ?? [];
      view.trace.hypotheticals = trace?.hypotheticals ?? [];
      break;
    }
    case "meta_plan": {
      const plan = ev.plan as {
        plan?: string;
        thought?: string;
        queries?: SubQuery[];
      };
      if (plan.plan) view.plan = plan.plan;
      if (plan.thought) view.thought = plan.thought;
      if (plan.queries?.length) view.queries = plan.queries;
      break;
    }
    case "tool_result": {
      const result = ev.result as { tool_name?: string; ok?: boolean; error?: string };
      if (!result.ok) {
        view.warnings.push(`${result.tool_name ?? "tool"}: ${result.error ?? "failed"}`);
      }
      break;
    }
    case "clarification_request":
      view.pendingQuestion = String(ev.question);
      view.messages.push({ role: "clarification", text: String(ev.question) });
      break;
    case "clarification_answer":
      view.pendingQuestion = null;
      view.messages.push({ role: "user", text: String(ev.text) });
      break;
    case "final_answer":
      view.messages.push({
        role: "assistant",
        text: String(ev.text),
        confident: Boolean(ev.confident),
        citations: view.trace.citations.map((c) => c.chunk_id),
      });
      break;
    case "parse_error":
      view.warnings.push(`plan parse error: ${String(ev.error)}`);
      break;
    case "error":
      view.warnings.push(`episode error: ${String(ev.error)}`);
      break;
    default:
      view.messages.push({ role: "raw", text: JSON.stringify(ev) });
  }
}

/** Minimal HTML rendering; the browser bootstrap injects this into the page.
 * Kept as a pure string function so it is testable without a DOM. */
export function renderHtml(view: SessionView): string {
  const bubbles = view.messages
    .map((m) => {
      const cites =
        m.citations?.length && m.role === "assistant"
          ? `<div class="citations">citations: ${m.citations.map(escapeHtml).join(", ")}</div>`
          : "";
      return `<div class="msg ${m.role}">${escapeHtml(m.text)}${cites}</div>`;
    })
    .join("\n");
  const warnings = view.warnings
    .map((w) => `<span class="chip warning">${escapeHtml(w)}</span>`)
    .join("");
  const prompt = view.pendingQuestion
    ? `<div class="clarify-card">${escapeHtml(view.pendingQuestion)}</div>`
    : "";
  const trace = `
<details class="trace"><summary>trace</summary>
<div>variants: ${view.trace.variants.map(escapeHtml).join(" | ")}</div>
<div>hypotheticals: ${view.trace.hypotheticals.length}</div>
<ul>${view.trace.citations
    .map((c) => `<li>[${escapeHtml(c.chunk_id)}] (${escapeHtml(c.kind)}, ${escapeHtml(c.source)}) ${c.score.toFixed(4)}</li>`)
    .join("")}</ul>
</details>`;
  const sidebar = `
<aside class="plan">
<div>${escapeHtml(view.plan)}</div>
<ul>${view.queries
    .map((q) => `<li>${escapeHtml(q.query)}${q.answer ? ` — ${escapeHtml(q.answer)}` : ""}</li>`)
    .join("")}</ul>
</aside>`;
  return `${bubbles}\n${warnings}\n${prompt}\n${trace}\n${sidebar}`;
}

function escapeHtml(s: string): string {
  return s
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}
