"""The conversational agent: intent parsing, tool dispatch, grounded replies.

A turn runs the full loop: parse the utterance into an ``Intent`` (rule-based
pattern table by default, optional remote planner), invoke registered tools
per intent, and render the reply strictly from tool-result payloads so that
every id, count, and title in a reply is traceable to the turn's trace.

Tool calls are bounded by ``TOOL_BUDGET`` per turn; plans that would exceed
it are truncated and the reply says so. A failed tool ends the plan and the
reply names the tool and error.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

from .analyzers import SENTIMENT_LABELS
from .errors import ConflictError, StorageError, ValidationError
from .logio import replay_jsonl
from .timeutil import format_rfc3339, parse_rfc3339

TOOL_BUDGET = 8
DEFAULT_SEARCH_K = 10
DEFAULT_ALERT_DAYS = 30
DEFAULT_ANALYTICS_DAYS = 7

PARAM_TYPES = ("string", "integer", "timestamp", "label", "string-list")

INTENT_KINDS = ("CreateAlert", "GetAnalytics", "SearchContent", "AnalyzeContent", "SetPreference", "Answer")

DEFAULT_PATTERNS_PATH = Path(__file__).parent / "data" / "patterns.json"

MEMORY_LOG = "memory.jsonl"


# --- tools ---


@dataclass
class ParamSpec:
    type: str
    required: bool = False


@dataclass
class ToolSpec:
    name: str
    description: str
    params: dict[str, ParamSpec] = field(default_factory=dict)

    def validate(self) -> None:
        for pname, pspec in self.params.items():
            if pspec.type not in PARAM_TYPES:
                raise ValidationError(f"tool {self.name}: param {pname} has unknown type {pspec.type!r}")


@dataclass
class ToolCall:
    tool: str
    args: dict
    call_index: int


@dataclass
class ToolResult:
    call_index: int
    ok: bool
    payload: dict | None = None
    error: str | None = None


def _check_type(value, ptype: str) -> bool:
    if ptype == "string":
        return isinstance(value, str)
    if ptype == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if ptype == "timestamp":
        if not isinstance(value, str):
            return False
        try:
            parse_rfc3339(value)
            return True
        except ValidationError:
            return False
    if ptype == "label":
        return value in SENTIMENT_LABELS
    if ptype == "string-list":
        return isinstance(value, list) and all(isinstance(v, str) for v in value)
    return False


class ToolRegistry:
    """Named, schema-validated operations the agent may invoke."""

    def __init__(self):
        self._tools: dict[str, tuple[ToolSpec, callable]] = {}

    def register(self, spec: ToolSpec, executor) -> None:
        spec.validate()
        if spec.name in self._tools:
            raise ConflictError(f"tool {spec.name!r} already registered")
        self._tools[spec.name] = (spec, executor)

    def __len__(self) -> int:
        return len(self._tools)

    def __contains__(self, name: str) -> bool:
        return name in self._tools

    def names(self) -> list[str]:
        return sorted(self._tools)

    def call(self, name: str, args: dict, call_index: int) -> tuple[ToolCall, ToolResult]:
        """Validate args against the schema and execute; never raises."""
        call = ToolCall(tool=name, args=dict(args), call_index=call_index)
        entry = self._tools.get(name)
        if entry is None:
            return call, ToolResult(call_index=call_index, ok=False, error=f"unknown tool {name!r}")
        spec, executor = entry
        for pname, pspec in spec.params.items():
            if pspec.required and pname not in args:
                return call, ToolResult(
                    call_index=call_index, ok=False, error=f"schema: missing required arg {pname!r}"
                )
        for aname, value in args.items():
            pspec = spec.params.get(aname)
            if pspec is None:
                return call, ToolResult(call_index=call_index, ok=False, error=f"schema: unknown arg {aname!r}")
            if not _check_type(value, pspec.type):
                return call, ToolResult(
                    call_index=call_index, ok=False, error=f"schema: arg {aname!r} is not a {pspec.type}"
                )
        try:
            payload = executor(dict(args))
        except Exception as exc:
            return call, ToolResult(call_index=call_index, ok=False, error=str(exc))
        return call, ToolResult(call_index=call_index, ok=True, payload=payload)


# --- memory ---


@dataclass
class MemoryEntry:
    owner: str
    key: str
    value: str
    updated_at: datetime
    kind: str = "preference"

    def to_dict(self) -> dict:
        return {
            "owner": self.owner,
            "key": self.key,
            "value": self.value,
            "updated_at": format_rfc3339(self.updated_at),
            "kind": self.kind,
        }


class MemoryStore:
    """Per-user preference upserts plus an append-only episodic log."""

    def __init__(self, store_dir: str | Path | None = None):
        self._prefs: dict[tuple[str, str], MemoryEntry] = {}
        self._episodic: list[MemoryEntry] = []
        self._lock = threading.Lock()
        self._path: Path | None = None
        if store_dir is not None:
            directory = Path(store_dir)
            directory.mkdir(parents=True, exist_ok=True)
            self._path = directory / MEMORY_LOG
            replay_jsonl(self._path, self._apply_raw, MEMORY_LOG)

    def put(self, owner: str, key: str, value: str, now: datetime, kind: str = "preference") -> MemoryEntry:
        if not key:
            raise ValidationError("memory key must be non-empty")
        if kind not in ("preference", "episodic"):
            raise ValidationError(f"unknown memory kind {kind!r}")
        entry = MemoryEntry(owner=owner, key=key, value=value, updated_at=now, kind=kind)
        with self._lock:
            if self._path is not None:
                try:
                    with open(self._path, "a", encoding="utf-8") as fh:
                        fh.write(json.dumps(entry.to_dict(), ensure_ascii=False) + "\n")
                        fh.flush()
                        os.fsync(fh.fileno())
                except OSError as exc:
                    raise StorageError(f"cannot append to memory log: {exc}") from exc
            self._apply(entry)
        return entry

    def get(self, owner: str, key: str) -> MemoryEntry | None:
        with self._lock:
            return self._prefs.get((owner, key))

    def preferences(self, owner: str) -> dict[str, str]:
        with self._lock:
            return {key: e.value for (own, key), e in self._prefs.items() if own == owner}

    def episodic(self, owner: str) -> list[MemoryEntry]:
        with self._lock:
            return [e for e in self._episodic if e.owner == owner]

    def _apply(self, entry: MemoryEntry) -> None:
        if entry.kind == "preference":
            self._prefs[(entry.owner, entry.key)] = entry
        else:
            self._episodic.append(entry)

    def _apply_raw(self, raw: dict) -> None:
        self._apply(
            MemoryEntry(
                owner=raw["owner"],
                key=raw["key"],
                value=raw["value"],
                updated_at=parse_rfc3339(raw["updated_at"]),
                kind=raw.get("kind", "preference"),
            )
        )


# --- intents and sessions ---


@dataclass
class Intent:
    kind: str
    topics: list[str] | None = None
    window_days: int | None = None
    window_from: datetime | None = None
    window_to: datetime | None = None
    sentiment: str | None = None
    person: list[str] | None = None
    org: list[str] | None = None
    location: list[str] | None = None
    query: str | None = None
    k: int | None = None
    item_ref: str | None = None
    alert_ref: str | None = None
    pref_key: str | None = None
    pref_value: str | None = None
    note: str | None = None  # fallback flavor, e.g. "smalltalk"


@dataclass
class AgentTurn:
    utterance: str
    intent: Intent
    trace: list[tuple[ToolCall, ToolResult]]
    reply: str
    completed_at: datetime


@dataclass
class SessionState:
    session_id: str
    owner: str
    turns: list[AgentTurn] = field(default_factory=list)
    active_alert: str | None = None


class SessionStore:
    """Sessions with per-session locks so each one runs turns serially."""

    def __init__(self):
        self._sessions: dict[str, SessionState] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def get_or_create(self, session_id: str, owner: str) -> SessionState:
        with self._guard:
            if session_id not in self._sessions:
                self._sessions[session_id] = SessionState(session_id=session_id, owner=owner)
                self._locks[session_id] = threading.Lock()
            return self._sessions[session_id]

    def lock(self, session_id: str) -> threading.Lock:
        with self._guard:
            return self._locks[session_id]


# --- rule-based planner ---


def load_pattern_table(path: str | Path | None = None) -> list[dict]:
    table = json.loads(Path(path or DEFAULT_PATTERNS_PATH).read_text(encoding="utf-8"))
    for row in table:
        row["_triggers"] = [re.compile(p) for p in row.get("triggers", [])]
        for slot in row.get("slots", []):
            slot["_pattern"] = re.compile(slot["pattern"])
    return table


def _split_phrases(raw: str) -> list[str]:
    parts = re.split(r",| and ", raw)
    return [p.strip().strip(".?!").strip() for p in parts if p.strip().strip(".?!").strip()]


def _extract_slots(row: dict, text: str) -> dict[str, str]:
    """Apply the row's extractors in order, removing each matched span.

    Removal keeps later extractors (topics in particular) from re-consuming
    window or filter phrases. First match per slot wins.
    """
    values: dict[str, str] = {}
    working = text
    for slot in row.get("slots", []):
        name = slot["slot"]
        m = slot["_pattern"].search(working)
        if not m:
            continue
        groups = {g: v for g, v in (m.groupdict() or {}).items() if v is not None}
        if "const" in slot:
            values.setdefault(name, slot["const"])
        elif "const_key" in slot and set(groups) == {"value"}:
            values.setdefault(f"{name}_key", slot["const_key"])
            values.setdefault(f"{name}_value", groups["value"])
        elif set(groups) == {"value"}:
            values.setdefault(name, groups["value"])
        else:
            for gname, gvalue in groups.items():
                values.setdefault(f"{name}_{gname}", gvalue)
        working = working[: m.start()] + " " + working[m.end():]
    return values


def _intent_from_slots(kind: str, values: dict[str, str]) -> Intent:
    intent = Intent(kind=kind)
    if "topics" in values:
        topics = _split_phrases(values["topics"])
        intent.topics = topics or None
    if "window_days" in values:
        try:
            days = int(values["window_days"])
            intent.window_days = days if days >= 1 else None
        except ValueError:
            pass
    if "window_absolute_from" in values and "window_absolute_to" in values:
        from .timeutil import parse_date_or_datetime

        try:
            intent.window_from = parse_date_or_datetime(values["window_absolute_from"])
            intent.window_to = parse_date_or_datetime(values["window_absolute_to"])
        except ValidationError:
            pass
    if values.get("sentiment") in SENTIMENT_LABELS:
        intent.sentiment = values["sentiment"]
    for slot, attr in (("person", "person"), ("org", "org"), ("location", "location")):
        if slot in values:
            phrases = _split_phrases(values[slot])
            if phrases:
                setattr(intent, attr, phrases)
    if "query" in values:
        query = values["query"].strip().strip(".?!").strip()
        intent.query = query or None
    if "k" in values:
        try:
            k = int(values["k"])
            intent.k = k if k >= 1 else None
        except ValueError:
            pass
    if "item_ref" in values:
        intent.item_ref = values["item_ref"]
    if "alert_ref" in values:
        intent.alert_ref = values["alert_ref"]
    if "preference_key" in values and "preference_value" in values:
        intent.pref_key = re.sub(r"[\s-]+", "_", values["preference_key"].strip())
        intent.pref_value = values["preference_value"].strip()
    return intent


class RulePlanner:
    """Deterministic pattern-table planner: same inputs, same Intent."""

    def __init__(self, table: list[dict] | None = None):
        self.table = table if table is not None else load_pattern_table()

    def parse(self, utterance: str, session: SessionState, memory: MemoryStore) -> Intent:
        text = utterance.strip().lower()
        for row in self.table:
            if not any(t.search(text) for t in row["_triggers"]):
                continue
            intent = _intent_from_slots(row["intent"], _extract_slots(row, text))
            if self._required_ok(intent, session):
                self._fill_memory_defaults(intent, session, memory)
                return intent
        return Intent(kind="Answer", note="smalltalk")

    @staticmethod
    def _required_ok(intent: Intent, session: SessionState) -> bool:
        if intent.kind == "CreateAlert":
            return bool(intent.topics)
        if intent.kind == "SearchContent":
            return bool(intent.query)
        if intent.kind == "AnalyzeContent":
            return bool(intent.item_ref or intent.query)
        if intent.kind == "SetPreference":
            return bool(intent.pref_key and intent.pref_value)
        return True  # GetAnalytics may fall back to the active alert at dispatch

    @staticmethod
    def _fill_memory_defaults(intent: Intent, session: SessionState, memory: MemoryStore) -> None:
        if intent.kind == "CreateAlert" and intent.sentiment is None:
            pref = memory.get(session.owner, "default_sentiment")
            if pref is not None and pref.value in SENTIMENT_LABELS:
                intent.sentiment = pref.value


# --- the agent ---


class Agent:
    """Binds a planner, a tool registry, and memory into the turn loop."""

    def __init__(self, registry: ToolRegistry, memory: MemoryStore, planner=None):
        self.registry = registry
        self.memory = memory
        self.planner = planner if planner is not None else RulePlanner()

    def parse_intent(self, utterance: str, session: SessionState) -> Intent:
        return self.planner.parse(utterance, session, self.memory)

    def execute_turn(self, session: SessionState, utterance: str, now: datetime) -> AgentTurn:
        intent = self.parse_intent(utterance, session)
        trace: list[tuple[ToolCall, ToolResult]] = []
        budget_exhausted = False

        def call(name: str, args: dict) -> ToolResult | None:
            nonlocal budget_exhausted
            if len(trace) >= TOOL_BUDGET:
                budget_exhausted = True
                return None
            tool_call, result = self.registry.call(name, args, call_index=len(trace))
            trace.append((tool_call, result))
            return result

        now_arg = format_rfc3339(now)

        if intent.kind == "CreateAlert":
            args = {"owner": session.owner, "topics": intent.topics, "now": now_arg}
            args.update(_window_args(intent, DEFAULT_ALERT_DAYS))
            if intent.sentiment:
                args["sentiment"] = intent.sentiment
            if intent.person:
                args["person"] = intent.person
            if intent.org:
                args["org"] = intent.org
            if intent.location:
                args["location"] = intent.location
            created = call("alerts.create", args)
            if created is not None and created.ok:
                alert_id = created.payload["alert"]["alert_id"]
                call("alerts.evaluate", {"alert_id": alert_id, "now": now_arg})
                session.active_alert = alert_id

        elif intent.kind == "GetAnalytics":
            alert_id = intent.alert_ref
            if alert_id is None and intent.topics:
                created = call(
                    "alerts.create",
                    {
                        "owner": session.owner,
                        "topics": intent.topics,
                        "days": intent.window_days or DEFAULT_ANALYTICS_DAYS,
                        "now": now_arg,
                        **({"sentiment": intent.sentiment} if intent.sentiment else {}),
                    },
                )
                if created is not None and created.ok:
                    alert_id = created.payload["alert"]["alert_id"]
            if alert_id is None:
                alert_id = session.active_alert
            if alert_id is not None:
                evaluated = call("alerts.evaluate", {"alert_id": alert_id, "now": now_arg})
                if evaluated is not None and evaluated.ok:
                    call("alerts.analytics", {"alert_id": alert_id, "now": now_arg})

        elif intent.kind == "SearchContent":
            call("index.search", {"query": intent.query, "k": intent.k or DEFAULT_SEARCH_K})

        elif intent.kind == "AnalyzeContent":
            if intent.item_ref:
                fetched = call("index.get", {"item_id": intent.item_ref})
                if fetched is not None and fetched.ok and fetched.payload.get("found"):
                    call("pipeline.analyze", {"item_id": intent.item_ref, "now": now_arg})
            else:
                found = call("index.search", {"query": intent.query, "k": DEFAULT_SEARCH_K})
                if found is not None and found.ok:
                    for result in found.payload["results"]:
                        outcome = call("pipeline.analyze", {"item_id": result["item_id"], "now": now_arg})
                        if outcome is None or not outcome.ok:
                            break

        elif intent.kind == "SetPreference":
            call("memory.put", {"owner": session.owner, "key": intent.pref_key, "value": intent.pref_value})

        reply = render_reply(intent, trace, budget_exhausted=budget_exhausted)
        turn = AgentTurn(utterance=utterance, intent=intent, trace=trace, reply=reply, completed_at=now)
        session.turns.append(turn)
        return turn


def _window_args(intent: Intent, default_days: int) -> dict:
    if intent.window_from is not None and intent.window_to is not None:
        return {"from": format_rfc3339(intent.window_from), "to": format_rfc3339(intent.window_to)}
    return {"days": intent.window_days or default_days}


def render_reply(intent: Intent, trace: list[tuple[ToolCall, ToolResult]], budget_exhausted: bool = False) -> str:
    """Deterministic reply templates interpolating only trace payload data."""
    failed = next(((c, r) for c, r in trace if not r.ok), None)
    if failed is not None:
        tool_call, result = failed
        return f"Tool {tool_call.tool} failed: {result.error}"
    if budget_exhausted:
        return "Stopped early: the per-turn tool budget was exhausted before all work finished."

    payloads = [r.payload for _, r in trace if r.payload is not None]

    if intent.kind == "CreateAlert" and len(payloads) >= 2:
        alert = payloads[0]["alert"]
        count = payloads[1]["count"]
        topics = ", ".join(alert["topics"])
        return f"Created alert {alert['alert_id']} for {topics}. {count} mention(s) in the current window."

    if intent.kind == "GetAnalytics":
        report = next((p["report"] for p in payloads if "report" in p), None)
        if report is None:
            return "I need an alert to report on. Create one first, or name topics, e.g. 'how many mentions of tesla this week?'"
        return (
            f"Alert {report['alert_id']}: {report['total']} mentions "
            f"({report['positive']} positive, {report['negative']} negative, {report['neutral']} neutral)."
        )

    if intent.kind == "SearchContent" and payloads:
        results = payloads[0]["results"]
        count = payloads[0]["count"]
        lines = [f"Found {count} result(s):"]
        lines += [f"- {r['title']} [{r['item_id']}]" for r in results]
        return "\n".join(lines)

    if intent.kind == "AnalyzeContent" and payloads:
        if "found" in payloads[0] and not payloads[0]["found"]:
            return f"No indexed item found for id {payloads[0]['item_id']}."
        analyses = [p for p in payloads if "sentiment_label" in p]
        if len(analyses) == 1:
            a = analyses[0]
            return (
                f"Analyzed '{a['title']}' [{a['item_id']}]: sentiment {a['sentiment_label']}, "
                f"{a['entity_count']} entities. Summary: {a['summary']}"
            )
        if analyses:
            lines = ["Analyzed:"]
            lines += [f"- {a['title']} [{a['item_id']}]: {a['sentiment_label']}" for a in analyses]
            return "\n".join(lines)

    if intent.kind == "SetPreference" and payloads:
        entry = payloads[0]["entry"]
        return f"Saved preference {entry['key']} = {entry['value']}."

    return (
        "Hello! I can create alerts, show analytics, search the index, and analyze items. "
        "Try: create an alert for tesla for the last week."
    )
