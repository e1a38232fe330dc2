"""The eight built-in tools wrapping pipeline, index, alerts, and memory.

Each executor takes a validated args dict and returns a JSON-serializable
payload. Payloads carry the fields replies interpolate (titles, counts,
labels) so replies stay grounded in trace data.
"""

from __future__ import annotations

from datetime import datetime
from typing import Callable

from .agent import MemoryStore, ParamSpec, ToolRegistry, ToolSpec
from .alerts import AbsoluteWindow, AlertStore, RollingWindow, compute_analytics, evaluate_alert
from .analyzers import AnalyzerBackend
from .errors import NotFoundError
from .index import MediaIndex
from .pipeline import builtin_video_pipeline, run_pipeline
from .timeutil import parse_rfc3339, utc_now

Clock = Callable[[], datetime]


def build_default_registry(
    index: MediaIndex,
    alerts: AlertStore,
    memory: MemoryStore,
    backend: AnalyzerBackend,
    clock: Clock = utc_now,
) -> ToolRegistry:
    registry = ToolRegistry()
    pipeline_spec = builtin_video_pipeline()

    def _now(args: dict) -> datetime:
        return parse_rfc3339(args["now"]) if "now" in args else clock()

    def pipeline_analyze(args: dict) -> dict:
        entry = index.get(args["item_id"])
        if entry is None:
            raise NotFoundError(f"no indexed item {args['item_id']!r}")
        record = run_pipeline(pipeline_spec, entry.item, backend, now=_now(args))
        index.upsert(entry.item, record)
        return {
            "item_id": entry.item.id,
            "title": entry.item.title,
            "sentiment_label": record.sentiment.label,
            "entity_count": len(record.entities),
            "summary": record.summary.text,
            "topics": list(record.topics),
            "record": record.to_dict(),
        }

    def index_search(args: dict) -> dict:
        results = index.search(args["query"], k=args.get("k", 10))
        enriched = []
        for r in results:
            entry = index.get(r.item_id)
            enriched.append(
                {
                    "item_id": r.item_id,
                    "score": r.score,
                    "snippet": r.snippet,
                    "title": entry.item.title if entry else "",
                }
            )
        return {"query": args["query"], "count": len(enriched), "results": enriched}

    def index_get(args: dict) -> dict:
        entry = index.get(args["item_id"])
        if entry is None:
            return {"item_id": args["item_id"], "found": False, "item": None}
        return {
            "item_id": args["item_id"],
            "found": True,
            "item": entry.item.to_dict(),
            "analyzed": entry.record is not None,
            "version": entry.version,
        }

    def alerts_create(args: dict) -> dict:
        if "from" in args or "to" in args:
            window = AbsoluteWindow(start=parse_rfc3339(args["from"]), end=parse_rfc3339(args["to"]))
        else:
            window = RollingWindow(days=args.get("days", 30))
        alert = alerts.create(
            owner=args["owner"],
            topics=args["topics"],
            window=window,
            now=_now(args),
            sentiment_filter=args.get("sentiment"),
            person_filter=args.get("person"),
            org_filter=args.get("org"),
            location_filter=args.get("location"),
        )
        return {"alert": alert.to_dict()}

    def alerts_evaluate(args: dict) -> dict:
        alert = alerts.get(args["alert_id"])
        mentions = evaluate_alert(alert, index.analyzed(), now=_now(args))
        return {
            "alert_id": alert.alert_id,
            "count": len(mentions),
            "mentions": [m.to_dict() for m in mentions],
        }

    def alerts_analytics(args: dict) -> dict:
        alert = alerts.get(args["alert_id"])
        analyzed = index.analyzed()
        mentions = evaluate_alert(alert, analyzed, now=_now(args))
        report = compute_analytics(alert, mentions, {item.id: record for item, record in analyzed})
        return {"report": report.to_dict()}

    def memory_put(args: dict) -> dict:
        entry = memory.put(
            owner=args["owner"],
            key=args["key"],
            value=args["value"],
            now=_now(args),
            kind=args.get("kind", "preference"),
        )
        return {"entry": entry.to_dict()}

    def memory_get(args: dict) -> dict:
        entry = memory.get(args["owner"], args["key"])
        return {"found": entry is not None, "entry": entry.to_dict() if entry else None}

    registry.register(
        ToolSpec(
            name="pipeline.analyze",
            description="Run the built-in analysis pipeline on an indexed item and store the record.",
            params={"item_id": ParamSpec("string", required=True), "now": ParamSpec("timestamp")},
        ),
        pipeline_analyze,
    )
    registry.register(
        ToolSpec(
            name="index.search",
            description="Semantic search over indexed media.",
            params={"query": ParamSpec("string", required=True), "k": ParamSpec("integer")},
        ),
        index_search,
    )
    registry.register(
        ToolSpec(
            name="index.get",
            description="Fetch one indexed item by id.",
            params={"item_id": ParamSpec("string", required=True)},
        ),
        index_get,
    )
    registry.register(
        ToolSpec(
            name="alerts.create",
            description="Create a monitoring alert.",
            params={
                "owner": ParamSpec("string", required=True),
                "topics": ParamSpec("string-list", required=True),
                "days": ParamSpec("integer"),
                "from": ParamSpec("timestamp"),
                "to": ParamSpec("timestamp"),
                "sentiment": ParamSpec("label"),
                "person": ParamSpec("string-list"),
                "org": ParamSpec("string-list"),
                "location": ParamSpec("string-list"),
                "now": ParamSpec("timestamp"),
            },
        ),
        alerts_create,
    )
    registry.register(
        ToolSpec(
            name="alerts.evaluate",
            description="Evaluate an alert against all analyzed items.",
            params={"alert_id": ParamSpec("string", required=True), "now": ParamSpec("timestamp")},
        ),
        alerts_evaluate,
    )
    registry.register(
        ToolSpec(
            name="alerts.analytics",
            description="Aggregate mention analytics for an alert.",
            params={"alert_id": ParamSpec("string", required=True), "now": ParamSpec("timestamp")},
        ),
        alerts_analytics,
    )
    registry.register(
        ToolSpec(
            name="memory.put",
            description="Store a user preference.",
            params={
                "owner": ParamSpec("string", required=True),
                "key": ParamSpec("string", required=True),
                "value": ParamSpec("string", required=True),
                "kind": ParamSpec("string"),
                "now": ParamSpec("timestamp"),
            },
        ),
        memory_put,
    )
    registry.register(
        ToolSpec(
            name="memory.get",
            description="Fetch a stored user preference.",
            params={"owner": ParamSpec("string", required=True), "key": ParamSpec("string", required=True)},
        ),
        memory_get,
    )
    return registry
