"""HTTP API over the stores, pipeline, alerts, and agent.

Endpoints are thin delegates: response bodies are the JSON serializations of
the underlying module outputs, with no endpoint-local computation. Error
mapping is total: validation -> 400, unknown id -> 404, conflicting
duplicate -> 409, anything else -> 500.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from fastapi import Body, FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .alerts import compute_analytics, evaluate_alert, window_from_dict
from .analyzers import SENTIMENT_LABELS
from .errors import ConflictError, MediaMindError, NotFoundError, ValidationError
from .index import SearchFilters
from .ingest import item_from_corpus_line
from .pipeline import builtin_video_pipeline, run_pipeline
from .runtime import AppState
from .timeutil import parse_date_or_datetime

MAX_SEARCH_K = 100


@dataclass
class ApiError:
    status: int
    code: str
    message: str

    def to_dict(self) -> dict:
        return {"status": self.status, "code": self.code, "message": self.message}


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content=ApiError(status, code, message).to_dict())


def create_app(state: AppState, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="mediamind", docs_url=None, redoc_url=None)
    pipeline_spec = builtin_video_pipeline()

    @app.exception_handler(ValidationError)
    async def _validation(request: Request, exc: ValidationError):
        return _error_response(400, "validation", str(exc))

    @app.exception_handler(RequestValidationError)
    async def _request_validation(request: Request, exc: RequestValidationError):
        return _error_response(400, "validation", "malformed request body")

    @app.exception_handler(NotFoundError)
    async def _not_found(request: Request, exc: NotFoundError):
        return _error_response(404, "not_found", str(exc))

    @app.exception_handler(ConflictError)
    async def _conflict(request: Request, exc: ConflictError):
        return _error_response(409, "conflict", str(exc))

    @app.exception_handler(MediaMindError)
    async def _internal(request: Request, exc: MediaMindError):
        return _error_response(500, "internal", str(exc))

    @app.get("/api/search")
    def search(
        q: str = "",
        k: str = "10",
        language: str | None = None,
        from_: str | None = Query(None, alias="from"),
        to: str | None = None,
        sentiment: str | None = None,
    ):
        try:
            k_value = int(k)
        except ValueError:
            raise ValidationError(f"k must be an integer, got {k!r}")
        if k_value < 0 or k_value > MAX_SEARCH_K:
            raise ValidationError(f"k must be between 0 and {MAX_SEARCH_K}")
        if sentiment is not None and sentiment not in SENTIMENT_LABELS:
            raise ValidationError(f"unknown sentiment label {sentiment!r}")
        filters = SearchFilters(
            language=language,
            date_from=parse_date_or_datetime(from_) if from_ else None,
            date_to=parse_date_or_datetime(to) if to else None,
            sentiment=sentiment,
        )
        return [r.to_dict() for r in state.index.search(q, k=k_value, filters=filters)]

    @app.post("/api/items")
    def post_item(body: dict = Body(...)):
        item = item_from_corpus_line(body, source="local-file")
        existing = state.index.get(item.id)
        if existing is not None:
            stored = {k: v for k, v in existing.item.to_dict().items() if k != "source"}
            incoming = {k: v for k, v in item.to_dict().items() if k != "source"}
            if stored != incoming:
                raise ConflictError(f"item {item.id} already registered with different content")
            return existing.item.to_dict()
        entry = state.index.upsert(item)
        return entry.item.to_dict()

    @app.post("/api/items/{item_id}/analyze")
    def analyze_item(item_id: str):
        entry = state.index.get(item_id)
        if entry is None:
            raise NotFoundError(f"no indexed item {item_id!r}")
        record = run_pipeline(pipeline_spec, entry.item, state.backend, now=state.clock())
        state.index.upsert(entry.item, record)
        return record.to_dict()

    @app.get("/api/users/{user_id}/settings")
    def get_settings(user_id: str):
        return state.memory.preferences(user_id)

    @app.put("/api/users/{user_id}/settings")
    def put_settings(user_id: str, body: dict = Body(...)):
        for key, value in body.items():
            if not isinstance(key, str) or not isinstance(value, str):
                raise ValidationError("settings must map string keys to string values")
        now = state.clock()
        for key, value in body.items():
            state.memory.put(user_id, key, value, now=now)
        return state.memory.preferences(user_id)

    @app.post("/api/alerts")
    def post_alert(body: dict = Body(...)):
        if "topics" not in body or "window" not in body:
            raise ValidationError("alert body requires topics and window")
        if not isinstance(body.get("window"), dict):
            raise ValidationError("window must be an object")
        topics = body["topics"]
        if not isinstance(topics, list) or not all(isinstance(t, str) for t in topics):
            raise ValidationError("topics must be a list of strings")
        for key in ("person_filter", "org_filter", "location_filter"):
            if body.get(key) is not None and (
                not isinstance(body[key], list) or not all(isinstance(p, str) for p in body[key])
            ):
                raise ValidationError(f"{key} must be a list of strings")
        alert = state.alerts.create(
            owner=str(body.get("owner", "default")),
            topics=topics,
            window=window_from_dict(body["window"]),
            now=state.clock(),
            sentiment_filter=body.get("sentiment_filter"),
            person_filter=body.get("person_filter"),
            org_filter=body.get("org_filter"),
            location_filter=body.get("location_filter"),
        )
        return alert.to_dict()

    @app.get("/api/alerts/{alert_id}/mentions")
    def get_mentions(alert_id: str):
        alert = state.alerts.get(alert_id)
        mentions = evaluate_alert(alert, state.index.analyzed(), now=state.clock())
        return [m.to_dict() for m in mentions]

    @app.get("/api/alerts/{alert_id}/analytics")
    def get_analytics(alert_id: str):
        alert = state.alerts.get(alert_id)
        analyzed = state.index.analyzed()
        mentions = evaluate_alert(alert, analyzed, now=state.clock())
        report = compute_analytics(alert, mentions, {item.id: record for item, record in analyzed})
        return report.to_dict()

    @app.post("/api/chat/{session_id}")
    def chat(session_id: str, body: dict = Body(...)):
        utterance = body.get("utterance")
        if not isinstance(utterance, str) or not utterance.strip():
            raise ValidationError("utterance must be a non-empty string")
        user = str(body.get("user", "default"))
        session = state.sessions.get_or_create(session_id, user)
        with state.sessions.lock(session_id):
            turn = state.agent.execute_turn(session, utterance, now=state.clock())
        return {
            "reply": turn.reply,
            "intent": turn.intent.kind,
            "trace": [{"tool": c.tool, "ok": r.ok} for c, r in turn.trace],
        }

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
