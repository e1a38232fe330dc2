"""Optional remote adapters behind the builtin contracts.

``RemoteBackend`` satisfies the analyzer backend interface by POSTing to a
hosted model service; ``RemotePlanner`` satisfies the planner contract the
same way. Both are configuration-selected (MEDIAMIND_BACKEND_URL /
MEDIAMIND_PLANNER_URL) and deliberately excluded from the deterministic
default path.
"""

from __future__ import annotations

import httpx

from .agent import Intent, MemoryStore, SessionState
from .analyzers import EntitySpan, SentimentResult, Summary, Transcript
from .ingest import MediaItem
from .timeutil import parse_date_or_datetime


class RemoteBackend:
    """Analyzer backend that delegates each operation to an HTTP service."""

    def __init__(self, base_url: str, client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self.client = client or httpx.Client(timeout=30.0)

    def _post(self, op: str, body: dict) -> dict:
        response = self.client.post(f"{self.base_url}/{op}", json=body)
        response.raise_for_status()
        return response.json()

    def transcribe(self, item: MediaItem) -> Transcript:
        data = self._post("transcribe", {"item": item.to_dict()})
        return Transcript(item_id=item.id, text=data["text"], source="remote-asr")

    def sentiment(self, text: str, language: str) -> SentimentResult:
        data = self._post("sentiment", {"text": text, "language": language})
        return SentimentResult.from_dict(data)

    def entities(self, text: str, language: str) -> list[EntitySpan]:
        data = self._post("entities", {"text": text, "language": language})
        return [EntitySpan.from_dict(e) for e in data["entities"]]

    def summary(self, text: str, max_sentences: int, language: str) -> Summary:
        data = self._post("summary", {"text": text, "max_sentences": max_sentences, "language": language})
        return Summary.from_dict(data)

    def topics(self, text: str, k: int, language: str) -> list[str]:
        data = self._post("topics", {"text": text, "k": k, "language": language})
        return list(data["topics"])


class RemotePlanner:
    """Planner that asks an LLM service for the intent of an utterance."""

    def __init__(self, base_url: str, client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self.client = client or httpx.Client(timeout=30.0)

    def parse(self, utterance: str, session: SessionState, memory: MemoryStore) -> Intent:
        response = self.client.post(
            f"{self.base_url}/plan",
            json={
                "utterance": utterance,
                "owner": session.owner,
                "active_alert": session.active_alert,
                "preferences": memory.preferences(session.owner),
            },
        )
        response.raise_for_status()
        data = response.json()
        slots = data.get("slots", {})
        intent = Intent(kind=data["kind"])
        for name in ("topics", "person", "org", "location"):
            if slots.get(name):
                setattr(intent, name, [str(v) for v in slots[name]])
        for name in ("sentiment", "query", "item_ref", "alert_ref", "pref_key", "pref_value", "note"):
            if slots.get(name) is not None:
                setattr(intent, name, str(slots[name]))
        if slots.get("window_days") is not None:
            intent.window_days = int(slots["window_days"])
        if slots.get("window_from") and slots.get("window_to"):
            intent.window_from = parse_date_or_datetime(str(slots["window_from"]))
            intent.window_to = parse_date_or_datetime(str(slots["window_to"]))
        if slots.get("k") is not None:
            intent.k = int(slots["k"])
        return intent
