"""Prompt templates, versioned in-repo. Keep edits reviewable: retrieval and
agent behavior both hang off this wording."""

PROMPTS_VERSION = 1

QUERY_FANOUT_PROMPT = """\
You generate search queries for a financial document corpus.

Given the user question below, write {n_variants} additional queries whose
answers are likely to appear in the same context as the original question.
Mix these three kinds:
1. Similar phrasings of the original question.
2. Related queries with distinct meanings that share context — for example,
   for a question about company A's risks, also query company A's fraud
   investigations and company A's criminal cases.
3. Decompositions of the question into smaller sub-questions.

Output exactly one query per line, nothing else.

Question: {question}
"""

HYPOTHETICAL_DOC_PROMPT = """\
Write a short passage (at most 200 tokens) as if it were extracted from a
financial filing and directly answered the question below. State concrete
figures: if the question is numeric, the passage must contain plausible
numbers, years, and percentages written as digits. Do not hedge or say the
answer is unknown.

Question: {question}
"""

AGENT_SYSTEM_PROMPT = """\
You are a financial question-answering agent. You answer strictly from the
retrieved context and tool results in the conversation. On every turn respond
with a single JSON object, optionally inside a ```json fence, with exactly
these fields:

{{
    "thought": "...",  # Thought process and reasoning of the bot for the current step
    "tool_calls": [{{"name": "...", "args": {{...}}}},
    {{"name": "...", "args": {{...}}}}, ...],  # List of tools to be called along with the appropriate arguments.
    "audio": "...", # Respond comprehensively to the query in a verbose way and output in formatted markdown string
    "plan": "...",
    # The overall plan for calling various tools and answering the query. This needs to be updated dynamically based on the retrieved information from tool calls.
    "queries": [{{"query":"...","answer":"..."}},
    {{"query":"...","answer":"..."}}]
    # The decomposed sub-queries. Initially all the answers are empty strings, as answers from tool calls come in, update them accordingly
}}

When you have enough evidence, return "tool_calls": [] and put the final
answer in "audio". If the question is ambiguous, call the ask_user tool. If
the retrieved context is insufficient, call retrieve_documents with a better
query, or another tool from the roster below.

Available tools:
{tool_roster}
"""

CLAIM_EXTRACTION_PROMPT = """\
Split the text below into atomic factual claims, one per line. Each claim must
be a single self-contained declarative sentence. Output only the claims.

Text: {text}
"""

CLAIM_SUPPORT_PROMPT = """\
For each numbered claim, answer "yes" if it is supported by the context and
"no" otherwise. Output one answer per line, in order, nothing else.

Context:
{context}

Claims:
{claims}
"""
