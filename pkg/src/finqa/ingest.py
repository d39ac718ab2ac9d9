"""Corpus loading, recursive chunking, table views, and directory sync."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable


class CorpusError(Exception):
    """Malformed corpus input (bad record, duplicate doc_id, ragged table)."""


@dataclass(frozen=True)
class TableBlock:
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        width = len(self.header)
        for r in self.rows:
            if len(r) != width:
                raise CorpusError(
                    f"ragged table: header has {width} columns, row has {len(r)}"
                )

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.header)


# A document body is an ordered list of blocks: prose strings or tables.
Block = str | TableBlock


@dataclass(frozen=True)
class SourceDocument:
    doc_id: str
    title: str
    body: tuple[Block, ...]
    metadata: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    doc_id: str
    kind: str  # prose | table | table_aggregate
    text: str
    char_span: tuple[int, int]
    seq: int


@dataclass
class ChunkingConfig:
    max_chunk_chars: int = 1600
    overlap_chars: int = 200
    separators: tuple[str, ...] = ("\n\n", "\n", ". ", " ", "")

    def validate(self) -> None:
        if not (self.max_chunk_chars > self.overlap_chars >= 0):
            raise ValueError(
                "require max_chunk_chars > overlap_chars >= 0, got "
                f"max={self.max_chunk_chars} overlap={self.overlap_chars}"
            )


@dataclass
class ChangeSet:
    added: list[str] = field(default_factory=list)
    removed: list[str] = field(default_factory=list)
    modified: list[str] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)  # (path, reason)

    def is_empty(self) -> bool:
        return not (self.added or self.removed or self.modified)


# ---------------------------------------------------------------------------
# Loading


def _parse_blocks(raw_blocks: list) -> list[Block]:
    blocks: list[Block] = []
    for b in raw_blocks:
        if isinstance(b, str):
            blocks.append(b)
        elif isinstance(b, dict) and "table" in b:
            t = b["table"]
            blocks.append(
                TableBlock(
                    header=tuple(str(c) for c in t.get("header", [])),
                    rows=tuple(tuple(str(c) for c in row) for row in t.get("rows", [])),
                )
            )
        else:
            raise CorpusError(f"unrecognized block: {b!r}")
    return blocks


_RESERVED_KEYS = {"doc_id", "title", "text", "body_blocks"}


def _document_from_record(rec: dict, default_id: str) -> SourceDocument:
    if "body_blocks" in rec:
        body = _parse_blocks(rec["body_blocks"])
    elif "text" in rec:
        body = [str(rec["text"])]
    else:
        raise CorpusError('record has neither "text" nor "body_blocks"')
    metadata = {
        k.replace(" ", "_"): str(v)
        for k, v in rec.items()
        if k not in _RESERVED_KEYS and not isinstance(v, (list, dict))
    }
    return SourceDocument(
        doc_id=str(rec.get("doc_id", default_id)),
        title=str(rec.get("title", "")),
        body=tuple(body),
        metadata=metadata,
    )


def load_corpus(path: str | Path, format: str = "jsonl") -> list[SourceDocument]:
    """Load documents from a jsonl file or a directory of markdown files.

    jsonl: one object per line with "text" or "body_blocks"; other scalar keys
    become metadata. markdown-dir: each *.md file is one prose document whose
    doc_id is its stem.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"corpus path does not exist: {path}")

    docs: list[SourceDocument] = []
    if format == "jsonl":
        files = sorted(path.glob("*.jsonl")) if path.is_dir() else [path]
        for f in files:
            with open(f, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    if not line.strip():
                        continue
                    try:
                        rec = json.loads(line)
                    except json.JSONDecodeError as e:
                        raise CorpusError(f"{f}:{lineno}: malformed json: {e}") from e
                    try:
                        docs.append(_document_from_record(rec, f"{f.stem}:{lineno}"))
                    except CorpusError as e:
                        raise CorpusError(f"{f}:{lineno}: {e}") from e
    elif format == "markdown-dir":
        if not path.is_dir():
            raise CorpusError(f"markdown-dir format requires a directory: {path}")
        for f in sorted(path.glob("*.md")):
            text = f.read_text(encoding="utf-8")
            docs.append(
                SourceDocument(doc_id=f.stem, title=f.stem, body=(text,))
            )
    else:
        raise CorpusError(f"unknown corpus format: {format}")

    seen: dict[str, int] = {}
    for d in docs:
        seen[d.doc_id] = seen.get(d.doc_id, 0) + 1
    dupes = [k for k, n in seen.items() if n > 1]
    if dupes:
        raise CorpusError(f"duplicate doc_ids: {sorted(dupes)}")
    return docs


# ---------------------------------------------------------------------------
# Recursive chunking


def _split_recursive(text: str, max_chars: int, separators: tuple[str, ...]) -> list[str]:
    """Split text into pieces <= max_chars using the separator hierarchy.

    Separators are kept attached to the preceding piece so that joining the
    pieces reproduces the input exactly.
    """
    if len(text) <= max_chars:
        return [text]
    if not separators:
        # hard character split, last resort
        return [text[i : i + max_chars] for i in range(0, len(text), max_chars)]

    sep, rest = separators[0], separators[1:]
    if sep == "":
        return [text[i : i + max_chars] for i in range(0, len(text), max_chars)]

    parts = text.split(sep)
    # re-attach separators so concatenation is lossless
    pieces = [p + sep for p in parts[:-1]] + [parts[-1]]

    out: list[str] = []
    buf = ""
    for piece in pieces:
        if len(piece) > max_chars:
            if buf:
                out.append(buf)
                buf = ""
            out.extend(_split_recursive(piece, max_chars, rest))
            continue
        if len(buf) + len(piece) <= max_chars:
            buf += piece
        else:
            if buf:
                out.append(buf)
            buf = piece
    if buf:
        out.append(buf)
    return [p for p in out if p]


def _split_with_overlap(text: str, cfg: ChunkingConfig) -> list[tuple[str, int, int]]:
    """Return (chunk_text, start, end) with adjacent chunks sharing overlap."""
    base = _split_recursive(text, cfg.max_chunk_chars - cfg.overlap_chars, cfg.separators)
    spans: list[tuple[str, int, int]] = []
    pos = 0
    for i, piece in enumerate(base):
        start = pos
        end = pos + len(piece)
        if i > 0 and cfg.overlap_chars > 0:
            ov_start = max(0, start - cfg.overlap_chars)
            spans.append((text[ov_start:end], ov_start, end))
        else:
            spans.append((piece, start, end))
        pos = end
    return spans


def extract_table_views(table: TableBlock, doc_id: str = "", seq_start: int = 0) -> list[Chunk]:
    """Serialize a table into one whole-table chunk plus per-row and per-column
    aggregate chunks so keyword search can hit a single row or column.
    """
    chunks: list[Chunk] = []
    seq = seq_start

    def add(kind: str, text: str) -> None:
        nonlocal seq
        chunks.append(
            Chunk(
                chunk_id=f"{doc_id}:{seq}",
                doc_id=doc_id,
                kind=kind,
                text=text,
                char_span=(0, len(text)),
                seq=seq,
            )
        )
        seq += 1

    header_line = " | ".join(table.header)
    lines = [header_line] + [" | ".join(r) for r in table.rows]
    add("table", "\n".join(lines))

    if table.n_rows == 0 or table.n_cols == 0:
        return chunks

    for row in table.rows:
        pairs = [f"{h}: {v}" for h, v in zip(table.header, row)]
        add("table_aggregate", "; ".join(pairs))
    for c in range(table.n_cols):
        col_cells = [row[c] for row in table.rows]
        add("table_aggregate", f"{table.header[c]}: " + "; ".join(col_cells))
    return chunks


def chunk_document(doc: SourceDocument, cfg: ChunkingConfig | None = None) -> list[Chunk]:
    """Chunk a document: recursive splitting for prose, whole-table plus
    row/column aggregates for tables. Deterministic in (doc, cfg)."""
    cfg = cfg or ChunkingConfig()
    cfg.validate()

    chunks: list[Chunk] = []
    seq = 0
    offset = 0
    for block in doc.body:
        if isinstance(block, TableBlock):
            views = extract_table_views(block, doc_id=doc.doc_id, seq_start=seq)
            chunks.extend(views)
            seq += len(views)
        else:
            for text, start, end in _split_with_overlap(block, cfg):
                chunks.append(
                    Chunk(
                        chunk_id=f"{doc.doc_id}:{seq}",
                        doc_id=doc.doc_id,
                        kind="prose",
                        text=text,
                        char_span=(offset + start, offset + end),
                        seq=seq,
                    )
                )
                seq += 1
            offset += len(block)
    return chunks


def reconstruct_prose(chunks: Iterable[Chunk], overlap_chars: int) -> str:
    """Inverse of prose chunking: strip overlaps and concatenate (test oracle)."""
    out = []
    prev_end = 0
    for c in sorted((c for c in chunks if c.kind == "prose"), key=lambda c: c.seq):
        start, end = c.char_span
        skip = prev_end - start if start < prev_end else 0
        out.append(c.text[skip:])
        prev_end = end
    return "".join(out)


# ---------------------------------------------------------------------------
# Incremental sync


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def load_manifest(path: str | Path) -> dict[str, str]:
    """Manifest jsonl -> {doc_id: digest}."""
    path = Path(path)
    manifest: dict[str, str] = {}
    if not path.exists():
        return manifest
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                manifest[rec["doc_id"]] = rec["digest"]
    return manifest


def write_manifest(path: str | Path, entries: dict[str, str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        now = datetime.now(timezone.utc).isoformat()
        for doc_id in sorted(entries):
            fh.write(
                json.dumps({"doc_id": doc_id, "digest": entries[doc_id], "ingested_at": now})
                + "\n"
            )


def sync_corpus(dir: str | Path, manifest: dict[str, str]) -> tuple[ChangeSet, dict[str, str]]:
    """Compare directory contents against a previous manifest.

    Returns the ChangeSet and the new manifest. doc_id is the file stem, one
    document per file (jsonl or md). Unreadable files are skipped, not fatal.
    """
    dir = Path(dir)
    change = ChangeSet()
    current: dict[str, str] = {}
    for f in sorted(dir.iterdir()):
        if not f.is_file() or f.suffix not in (".jsonl", ".md", ".json"):
            continue
        doc_id = f.stem
        try:
            current[doc_id] = _digest(f)
        except OSError as e:
            change.skipped.append((str(f), str(e)))

    for doc_id, dig in current.items():
        if doc_id not in manifest:
            change.added.append(doc_id)
        elif manifest[doc_id] != dig:
            change.modified.append(doc_id)
    for doc_id in manifest:
        if doc_id not in current:
            change.removed.append(doc_id)
    change.added.sort()
    change.removed.sort()
    change.modified.sort()
    return change, current
