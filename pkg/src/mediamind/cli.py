"""Operator command line: ingest, search, alerts, pipelines, serve, chat.

Exit codes: 0 success, 1 validation error, 2 I/O or storage error.
"""

from __future__ import annotations

import json
import socket
import sys
from pathlib import Path

import click

from .alerts import AbsoluteWindow, RollingWindow, compute_analytics, evaluate_alert
from .config import load_config
from .errors import MediaMindError, NotFoundError, StorageError, ValidationError
from .ingest import load_corpus
from .pipeline import PipelineSpec, builtin_video_pipeline, run_pipeline
from .runtime import build_state
from .timeutil import parse_date_or_datetime, utc_now

EXIT_VALIDATION = 1
EXIT_IO = 2


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guard(fn):
    """Map package errors onto the documented exit codes."""

    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValidationError, NotFoundError) as exc:
            _fail(str(exc), EXIT_VALIDATION)
        except (StorageError, OSError) as exc:
            _fail(str(exc), EXIT_IO)
        except MediaMindError as exc:
            _fail(str(exc), EXIT_VALIDATION)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None, help="Path to a JSON config file.")
@click.pass_context
def main(ctx, config_path):
    """Media monitoring from the terminal."""
    ctx.obj = load_config(config_path)


def _state(ctx):
    return build_state(ctx.obj, clock=utc_now)


@main.command()
@click.argument("corpus", type=click.Path())
@click.option("--analyze", is_flag=True, help="Run the analysis pipeline on each ingested item.")
@click.pass_context
@_guard
def ingest(ctx, corpus, analyze):
    """Load a JSONL corpus into the index."""
    state = _state(ctx)
    items = load_corpus(corpus)
    spec = builtin_video_pipeline()
    analyzed = 0
    for item in items:
        if analyze:
            record = run_pipeline(spec, item, state.backend, now=state.clock())
            state.index.upsert(item, record)
            analyzed += 1
        else:
            state.index.upsert(item)
    if analyze:
        click.echo(f"{len(items)} items, {analyzed} analyzed")
    else:
        click.echo(f"{len(items)} items")


@main.command()
@click.argument("query")
@click.option("-k", "k", type=int, default=10, show_default=True, help="Number of results.")
@click.option("--json", "as_json", is_flag=True, help="Emit one JSON object per line.")
@click.pass_context
@_guard
def search(ctx, query, k, as_json):
    """Semantic search over the index."""
    state = _state(ctx)
    results = state.index.search(query, k=k)
    for r in results:
        if as_json:
            click.echo(json.dumps(r.to_dict(), ensure_ascii=False))
        else:
            click.echo(f"{r.score:+.4f}  {r.item_id}  {r.snippet}")


@main.group()
def alert():
    """Create and evaluate monitoring alerts."""


@alert.command("create")
@click.option("--topics", default=None, help="Comma-separated topic phrases.")
@click.option("--days", type=int, default=None, help="Rolling window size in days.")
@click.option("--from", "from_", default=None, help="Absolute window start (date or RFC 3339).")
@click.option("--to", default=None, help="Absolute window end (date or RFC 3339).")
@click.option("--sentiment", default=None, help="positive, negative, or neutral.")
@click.option("--person", default=None, help="Comma-separated person filter.")
@click.option("--org", default=None, help="Comma-separated organization filter.")
@click.option("--location", default=None, help="Comma-separated location filter.")
@click.option("--owner", default="cli", show_default=True)
@click.pass_context
@_guard
def alert_create(ctx, topics, days, from_, to, sentiment, person, org, location, owner):
    """Create an alert and print its id."""
    if not topics:
        _fail("--topics is required", EXIT_VALIDATION)
    if from_ and to:
        window = AbsoluteWindow(start=parse_date_or_datetime(from_), end=parse_date_or_datetime(to))
    else:
        window = RollingWindow(days=days if days is not None else 30)
    state = _state(ctx)
    split = lambda s: [p for p in s.split(",")] if s else None
    created = state.alerts.create(
        owner=owner,
        topics=split(topics),
        window=window,
        now=state.clock(),
        sentiment_filter=sentiment,
        person_filter=split(person),
        org_filter=split(org),
        location_filter=split(location),
    )
    click.echo(created.alert_id)


@alert.command("eval")
@click.argument("alert_id")
@click.pass_context
@_guard
def alert_eval(ctx, alert_id):
    """Evaluate an alert and print its mentions."""
    state = _state(ctx)
    found = state.alerts.get(alert_id)
    mentions = evaluate_alert(found, state.index.analyzed(), now=state.clock())
    click.echo(f"{len(mentions)} mentions")
    for m in mentions:
        click.echo(f"{m.to_dict()['matched_at']}  {m.item_id}  {','.join(m.matched_topics)}")


@alert.command("stats")
@click.argument("alert_id")
@click.pass_context
@_guard
def alert_stats(ctx, alert_id):
    """Print the analytics report for an alert."""
    state = _state(ctx)
    found = state.alerts.get(alert_id)
    analyzed = state.index.analyzed()
    mentions = evaluate_alert(found, analyzed, now=state.clock())
    report = compute_analytics(found, mentions, {item.id: record for item, record in analyzed})
    click.echo(f"total     {report.total}")
    click.echo(f"positive  {report.positive}")
    click.echo(f"negative  {report.negative}")
    click.echo(f"neutral   {report.neutral}")
    for day, count in report.timeline:
        click.echo(f"{day.isoformat()}  {count}")


@main.command()
@click.argument("item_id")
@click.option("--pipeline", "pipeline_file", type=click.Path(), default=None, help="Custom pipeline JSON file.")
@click.pass_context
@_guard
def analyze(ctx, item_id, pipeline_file):
    """Run the analysis pipeline on one indexed item and print the record."""
    state = _state(ctx)
    entry = state.index.get(item_id)
    if entry is None:
        raise NotFoundError(f"no indexed item {item_id!r}")
    if pipeline_file:
        spec = PipelineSpec.from_dict(json.loads(Path(pipeline_file).read_text(encoding="utf-8")))
    else:
        spec = builtin_video_pipeline()
    record = run_pipeline(spec, entry.item, state.backend, now=state.clock())
    state.index.upsert(entry.item, record)
    click.echo(json.dumps(record.to_dict(), ensure_ascii=False, indent=2))


@main.command()
@click.option("--addr", default=None, help="host:port to listen on (overrides config).")
@click.option("--ui-dir", type=click.Path(), default=None, help="Directory of built UI assets to serve at /ui.")
@click.pass_context
@_guard
def serve(ctx, addr, ui_dir):
    """Run the HTTP API until interrupted."""
    import uvicorn

    from .api import create_app

    config = ctx.obj
    if addr:
        config.addr = addr
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((config.host, config.port))
    except OSError as exc:
        probe.close()
        _fail(f"cannot listen on {config.addr}: {exc}", EXIT_IO)
    finally:
        probe.close()
    state = build_state(config, clock=utc_now)
    app = create_app(state, static_dir=ui_dir)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")


@main.command()
@click.option("--user", default="cli", show_default=True, help="User id for the session.")
@click.pass_context
@_guard
def chat(ctx, user):
    """Line-oriented chat REPL over the agent."""
    state = _state(ctx)
    session = state.sessions.get_or_create("cli", user)
    click.echo("mediamind chat (empty line or 'exit' to quit)")
    for line in sys.stdin:
        utterance = line.strip()
        if not utterance or utterance in ("exit", "quit"):
            break
        turn = state.agent.execute_turn(session, utterance, now=state.clock())
        click.echo(turn.reply)
        if turn.trace:
            summary = ", ".join(f"{c.tool}:{'ok' if r.ok else 'err'}" for c, r in turn.trace)
            click.echo(f"[tools] {summary}")
        else:
            click.echo("[tools] none")


if __name__ == "__main__":
    main()
