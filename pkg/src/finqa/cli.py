"""Command-line interface: ingest, query, chat, eval, serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .agent import Agent, AgentState
from .config import ServiceConfig
from .index.store import HybridIndex
from .ingest import ChunkingConfig, chunk_document, load_corpus
from .evaluation.bench import (
    PipelineVariant,
    ablation_grid,
    load_dataset,
    run_benchmark,
    write_report,
)
from .tools.builtin import build_registry


def _load_config(config_path: str | None) -> ServiceConfig:
    if config_path:
        return ServiceConfig.from_file(config_path)
    return ServiceConfig()


def _build_index(cfg: ServiceConfig, corpus: str, format: str):
    gateway = cfg.build_gateway()
    index = HybridIndex(dim=cfg.embed_dim, mode=cfg.index_mode)
    docs = load_corpus(corpus, format)
    chunking = ChunkingConfig()
    n_chunks = 0
    for doc in docs:
        chunks = chunk_document(doc, chunking)
        if chunks:
            index.upsert_chunks(chunks, gateway.embed([c.text for c in chunks]))
        n_chunks += len(chunks)
    return index, gateway, len(docs), n_chunks


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Service config file (yaml).")
@click.pass_context
def main(ctx, config_path):
    """Agentic hybrid-retrieval question answering over document corpora."""
    ctx.ensure_object(dict)
    try:
        ctx.obj["cfg"] = _load_config(config_path)
    except Exception as e:  # noqa: BLE001
        raise click.ClickException(str(e))


@main.command()
@click.argument("corpus", type=click.Path(exists=True))
@click.option("--format", default="jsonl", type=click.Choice(["jsonl", "markdown-dir"]))
@click.option("--snapshot", type=click.Path(), default=None, help="Write an index snapshot here.")
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def ingest(ctx, corpus, format, snapshot, as_json):
    """Load a corpus, chunk it, and build the hybrid index."""
    try:
        index, _gw, n_docs, n_chunks = _build_index(ctx.obj["cfg"], corpus, format)
        if snapshot:
            index.persist(snapshot)
    except Exception as e:  # noqa: BLE001
        raise click.ClickException(str(e))
    out = {"documents": n_docs, "chunks": n_chunks, "snapshot": snapshot}
    click.echo(json.dumps(out) if as_json else
               f"ingested {n_docs} documents ({n_chunks} chunks)")


@main.command()
@click.argument("question")
@click.option("--corpus", type=click.Path(exists=True), required=False)
@click.option("--snapshot", type=click.Path(exists=True), required=False)
@click.option("--format", default="jsonl", type=click.Choice(["jsonl", "markdown-dir"]))
@click.option("--json", "as_json", is_flag=True)
@click.pass_context
def query(ctx, question, corpus, snapshot, format, as_json):
    """Answer one question against a corpus or a saved index snapshot."""
    cfg = ctx.obj["cfg"]
    try:
        if snapshot:
            index = HybridIndex.load(snapshot)
            gateway = cfg.build_gateway()
        elif corpus:
            index, gateway, _d, _c = _build_index(cfg, corpus, format)
        else:
            raise click.ClickException("need --corpus or --snapshot")
        agent = Agent(index, build_registry(), gateway, retrieval_cfg=cfg.retrieval)
        result = agent.answer_query(question, AgentState(budgets=cfg.budgets))
    except click.ClickException:
        raise
    except Exception as e:  # noqa: BLE001
        raise click.ClickException(str(e))
    if as_json:
        click.echo(json.dumps({
            "answer": result.answer,
            "confident": result.confident,
            "citations": result.context.chunk_ids(),
            "trace": result.context.to_trace_dict(),
        }))
    else:
        click.echo(result.answer)
        if result.context.chunks:
            click.echo("\ncitations: " + ", ".join(result.context.chunk_ids()))


@main.command()
@click.option("--corpus", type=click.Path(exists=True), required=True)
@click.option("--format", default="jsonl", type=click.Choice(["jsonl", "markdown-dir"]))
@click.pass_context
def chat(ctx, corpus, format):
    """Interactive REPL; answers the agent's clarification requests inline."""
    cfg = ctx.obj["cfg"]
    index, gateway, n_docs, _c = _build_index(cfg, corpus, format)

    def clarifier(question: str) -> str:
        click.echo(f"[clarification requested] {question}")
        return click.prompt("your answer", default="", show_default=False)

    agent = Agent(index, build_registry(), gateway, retrieval_cfg=cfg.retrieval,
                  clarifier=clarifier)
    click.echo(f"loaded {n_docs} documents. Ctrl-D to exit.")
    while True:
        try:
            question = click.prompt("you", prompt_suffix="> ")
        except (click.Abort, EOFError):
            click.echo("bye")
            return
        if not question.strip():
            continue
        result = agent.answer_query(question, AgentState(budgets=cfg.budgets))
        click.echo(result.answer)
        if result.context.chunks:
            click.echo("citations: " + ", ".join(result.context.chunk_ids()))


@main.group(name="eval")
def eval_group():
    """Benchmark the pipeline over a QA dataset."""


def _eval_common(cfg, dataset, corpus, format):
    index, _gw, _d, _c = _build_index(cfg, corpus, format)
    records = load_dataset(dataset)
    return index, records


@eval_group.command(name="run")
@click.option("--dataset", type=click.Path(exists=True), required=True)
@click.option("--corpus", type=click.Path(exists=True), required=True)
@click.option("--format", default="jsonl", type=click.Choice(["jsonl", "markdown-dir"]))
@click.option("--pipeline", default="multi_hyde+bm25+ce")
@click.option("--profile", default="fixture", type=click.Choice(["fixture", "live"]))
@click.option("--out", type=click.Path(), default="eval_out")
@click.option("--no-figure", is_flag=True)
@click.pass_context
def eval_run(ctx, dataset, corpus, format, pipeline, profile, out, no_figure):
    """Run one pipeline variant over a dataset and write the report."""
    cfg = ctx.obj["cfg"]
    try:
        index, records = _eval_common(cfg, dataset, corpus, format)
        variants = {v.name: v for v in ablation_grid()}
        variant = variants.get(pipeline) or PipelineVariant(pipeline)
        report = run_benchmark(records, index, variant, base_cfg=cfg.retrieval,
                               profile=profile)
        paths = write_report([report], out, render_figure=not no_figure)
    except Exception as e:  # noqa: BLE001
        raise click.ClickException(str(e))
    click.echo(json.dumps({k: str(p) for k, p in paths.items()}))
    if report.failures:
        click.echo(f"warning: {report.failures} records failed", err=True)


@eval_group.command(name="ablate")
@click.option("--dataset", type=click.Path(exists=True), required=True)
@click.option("--corpus", type=click.Path(exists=True), required=True)
@click.option("--format", default="jsonl", type=click.Choice(["jsonl", "markdown-dir"]))
@click.option("--profile", default="fixture", type=click.Choice(["fixture", "live"]))
@click.option("--out", type=click.Path(), default="eval_out")
@click.option("--no-figure", is_flag=True)
@click.pass_context
def eval_ablate(ctx, dataset, corpus, format, profile, out, no_figure):
    """Run the full 6-variant ablation grid."""
    cfg = ctx.obj["cfg"]
    try:
        index, records = _eval_common(cfg, dataset, corpus, format)
        reports = [
            run_benchmark(records, index, v, base_cfg=cfg.retrieval, profile=profile)
            for v in ablation_grid()
        ]
        paths = write_report(reports, out, render_figure=not no_figure)
    except Exception as e:  # noqa: BLE001
        raise click.ClickException(str(e))
    click.echo(json.dumps({k: str(p) for k, p in paths.items()}))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8765, type=int)
@click.option("--profile", default=None, type=click.Choice(["fixture", "live"]))
@click.pass_context
def serve(ctx, host, port, profile):
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    cfg = ctx.obj["cfg"]
    if profile:
        cfg.profile = profile
    app = create_app(cfg)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
