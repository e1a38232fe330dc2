"""Alert definitions, mention matching, and analytics aggregation.

An alert matches an analyzed item when all four clauses hold: a topic phrase
occurs (token-boundary, case-insensitive) in the title or transcript; the
publish time falls inside the window; the sentiment filter, if set, equals
the record's label; and every present entity filter names at least one
entity surface of its type. Analytics bucket mentions into UTC calendar
days.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path

from .analyzers import SENTIMENT_LABELS, tokenize
from .errors import NotFoundError, StorageError, ValidationError
from .ingest import MediaItem
from .logio import replay_jsonl
from .pipeline import AnalysisRecord
from .timeutil import format_rfc3339, parse_rfc3339, utc_day

ALERT_LOG = "alerts.jsonl"


@dataclass
class AbsoluteWindow:
    start: datetime
    end: datetime

    def validate(self) -> None:
        if self.start >= self.end:
            raise ValidationError("window start must be before end")

    def to_dict(self) -> dict:
        return {"kind": "absolute", "start": format_rfc3339(self.start), "end": format_rfc3339(self.end)}


@dataclass
class RollingWindow:
    days: int

    def validate(self) -> None:
        if self.days < 1:
            raise ValidationError("rolling window must cover at least 1 day")

    def to_dict(self) -> dict:
        return {"kind": "rolling", "days": self.days}


Window = AbsoluteWindow | RollingWindow


def window_from_dict(data: dict) -> Window:
    kind = data.get("kind")
    if kind == "absolute":
        window = AbsoluteWindow(start=parse_rfc3339(data["start"]), end=parse_rfc3339(data["end"]))
    elif kind == "rolling":
        try:
            window = RollingWindow(days=int(data["days"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"bad rolling window: {data!r}") from exc
    else:
        raise ValidationError(f"unknown window kind {kind!r}")
    window.validate()
    return window


def window_bounds(window: Window, now: datetime) -> tuple[datetime, datetime]:
    """[start, end) bounds; a rolling window is [now - N days, now)."""
    if isinstance(window, RollingWindow):
        return now - timedelta(days=window.days), now
    return window.start, window.end


@dataclass
class Alert:
    alert_id: str
    owner: str
    topics: list[str]
    window: Window
    sentiment_filter: str | None = None
    person_filter: list[str] | None = None
    org_filter: list[str] | None = None
    location_filter: list[str] | None = None
    created_at: datetime = field(default_factory=lambda: datetime.fromtimestamp(0))

    def to_dict(self) -> dict:
        return {
            "alert_id": self.alert_id,
            "owner": self.owner,
            "topics": list(self.topics),
            "window": self.window.to_dict(),
            "sentiment_filter": self.sentiment_filter,
            "person_filter": self.person_filter,
            "org_filter": self.org_filter,
            "location_filter": self.location_filter,
            "created_at": format_rfc3339(self.created_at),
        }

    @classmethod
    def from_dict(cls, data: dict) -> Alert:
        return cls(
            alert_id=data["alert_id"],
            owner=data["owner"],
            topics=list(data["topics"]),
            window=window_from_dict(data["window"]),
            sentiment_filter=data.get("sentiment_filter"),
            person_filter=data.get("person_filter"),
            org_filter=data.get("org_filter"),
            location_filter=data.get("location_filter"),
            created_at=parse_rfc3339(data["created_at"]),
        )


@dataclass
class Mention:
    alert_id: str
    item_id: str
    matched_topics: list[str]
    matched_at: datetime

    def to_dict(self) -> dict:
        return {
            "alert_id": self.alert_id,
            "item_id": self.item_id,
            "matched_topics": list(self.matched_topics),
            "matched_at": format_rfc3339(self.matched_at),
        }


@dataclass
class AnalyticsReport:
    """Aggregates over one alert's mentions; internal sums always hold.

    Mentions lacking an analysis record count as neutral, so the three
    sentiment buckets always sum to the total.
    """

    alert_id: str
    total: int
    positive: int
    negative: int
    neutral: int
    timeline: list[tuple[date, int]]

    def __post_init__(self) -> None:
        if self.positive + self.negative + self.neutral != self.total:
            raise ValidationError("sentiment counts must sum to total")
        if sum(count for _, count in self.timeline) != self.total:
            raise ValidationError("timeline counts must sum to total")
        days = [day for day, _ in self.timeline]
        if any(b <= a for a, b in zip(days, days[1:])):
            raise ValidationError("timeline days must be strictly increasing")

    def to_dict(self) -> dict:
        return {
            "alert_id": self.alert_id,
            "total": self.total,
            "positive": self.positive,
            "negative": self.negative,
            "neutral": self.neutral,
            "timeline": [{"day": day.isoformat(), "count": count} for day, count in self.timeline],
        }


def normalize_phrases(phrases: list[str]) -> list[str]:
    return [p.strip().lower() for p in phrases if p and p.strip()]


def new_alert(
    owner: str,
    topics: list[str],
    window: Window,
    now: datetime,
    sentiment_filter: str | None = None,
    person_filter: list[str] | None = None,
    org_filter: list[str] | None = None,
    location_filter: list[str] | None = None,
) -> Alert:
    """Normalize fields, validate, and derive the alert id.

    The id hashes the canonical field serialization together with the owner
    and creation time, so identical definitions created at different times
    get different ids.
    """
    topics = normalize_phrases(topics)
    if not topics:
        raise ValidationError("topics must be non-empty")
    window.validate()
    if sentiment_filter is not None and sentiment_filter not in SENTIMENT_LABELS:
        raise ValidationError(f"unknown sentiment label {sentiment_filter!r}")
    person_filter = normalize_phrases(person_filter) if person_filter else None
    org_filter = normalize_phrases(org_filter) if org_filter else None
    location_filter = normalize_phrases(location_filter) if location_filter else None
    canonical = json.dumps(
        {
            "owner": owner,
            "topics": topics,
            "window": window.to_dict(),
            "sentiment_filter": sentiment_filter,
            "person_filter": person_filter,
            "org_filter": org_filter,
            "location_filter": location_filter,
            "created_at": format_rfc3339(now),
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    alert_id = hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
    return Alert(
        alert_id=alert_id,
        owner=owner,
        topics=topics,
        window=window,
        sentiment_filter=sentiment_filter,
        person_filter=person_filter,
        org_filter=org_filter,
        location_filter=location_filter,
        created_at=now,
    )


def _contains_phrase(text_tokens: list[str], phrase: str) -> bool:
    needle = tuple(tokenize(phrase))
    if not needle:
        return False
    length = len(needle)
    for i in range(len(text_tokens) - length + 1):
        if tuple(text_tokens[i:i + length]) == needle:
            return True
    return False


def match_item(alert: Alert, record: AnalysisRecord, item: MediaItem, now: datetime) -> Mention | None:
    """All four clauses must hold; matched_topics collects clause-(a) hits."""
    if record.item_id != item.id:
        raise ValidationError("record does not belong to item")
    title_tokens = tokenize(item.title)
    body_tokens = tokenize(record.transcript.text)
    matched = [
        t for t in alert.topics
        if _contains_phrase(title_tokens, t) or _contains_phrase(body_tokens, t)
    ]
    if not matched:
        return None
    start, end = window_bounds(alert.window, now)
    if not (start <= item.published_at < end):
        return None
    if alert.sentiment_filter is not None and record.sentiment.label != alert.sentiment_filter:
        return None
    for phrases, etype in (
        (alert.person_filter, "PERSON"),
        (alert.org_filter, "ORG"),
        (alert.location_filter, "LOC"),
    ):
        if phrases is None:
            continue
        surfaces = {e.surface.lower() for e in record.entities if e.type == etype}
        if not any(p in surfaces for p in phrases):
            return None
    return Mention(alert_id=alert.alert_id, item_id=item.id, matched_topics=matched, matched_at=item.published_at)


def evaluate_alert(
    alert: Alert,
    analyzed: list[tuple[MediaItem, AnalysisRecord]],
    now: datetime,
) -> list[Mention]:
    """Mentions for every matching analyzed item, newest first, id tiebreak."""
    mentions = []
    for item, record in analyzed:
        mention = match_item(alert, record, item, now)
        if mention is not None:
            mentions.append(mention)
    mentions.sort(key=lambda m: m.item_id)
    mentions.sort(key=lambda m: m.matched_at, reverse=True)
    return mentions


def compute_analytics(
    alert: Alert,
    mentions: list[Mention],
    records_by_id: dict[str, AnalysisRecord],
) -> AnalyticsReport:
    """Aggregate sentiment counts and a per-UTC-day timeline."""
    counts = {"positive": 0, "negative": 0, "neutral": 0}
    per_day: dict[date, int] = {}
    for mention in mentions:
        if mention.alert_id != alert.alert_id:
            raise ValidationError("mention does not belong to alert")
        record = records_by_id.get(mention.item_id)
        label = record.sentiment.label if record is not None else "neutral"
        counts[label] += 1
        day = utc_day(mention.matched_at)
        per_day[day] = per_day.get(day, 0) + 1
    return AnalyticsReport(
        alert_id=alert.alert_id,
        total=len(mentions),
        positive=counts["positive"],
        negative=counts["negative"],
        neutral=counts["neutral"],
        timeline=sorted(per_day.items()),
    )


class AlertStore:
    """Append-only alert log with in-memory lookup; same discipline as the index."""

    def __init__(self, store_dir: str | Path | None = None):
        self._alerts: dict[str, Alert] = {}
        self._lock = threading.Lock()
        self._path: Path | None = None
        if store_dir is not None:
            directory = Path(store_dir)
            directory.mkdir(parents=True, exist_ok=True)
            self._path = directory / ALERT_LOG
            replay_jsonl(self._path, self._apply_event, ALERT_LOG)

    def create(
        self,
        owner: str,
        topics: list[str],
        window: Window,
        now: datetime,
        sentiment_filter: str | None = None,
        person_filter: list[str] | None = None,
        org_filter: list[str] | None = None,
        location_filter: list[str] | None = None,
    ) -> Alert:
        alert = new_alert(
            owner=owner,
            topics=topics,
            window=window,
            now=now,
            sentiment_filter=sentiment_filter,
            person_filter=person_filter,
            org_filter=org_filter,
            location_filter=location_filter,
        )
        with self._lock:
            if self._path is not None:
                try:
                    with open(self._path, "a", encoding="utf-8") as fh:
                        fh.write(json.dumps(alert.to_dict(), ensure_ascii=False) + "\n")
                        fh.flush()
                        os.fsync(fh.fileno())
                except OSError as exc:
                    raise StorageError(f"cannot append to alert log: {exc}") from exc
            self._alerts[alert.alert_id] = alert
        return alert

    def get(self, alert_id: str) -> Alert:
        with self._lock:
            alert = self._alerts.get(alert_id)
        if alert is None:
            raise NotFoundError(f"no alert {alert_id!r}")
        return alert

    def list(self, owner: str | None = None) -> list[Alert]:
        with self._lock:
            alerts = list(self._alerts.values())
        if owner is not None:
            alerts = [a for a in alerts if a.owner == owner]
        return sorted(alerts, key=lambda a: (a.created_at, a.alert_id))

    def _apply_event(self, raw: dict) -> None:
        alert = Alert.from_dict(raw)
        self._alerts[alert.alert_id] = alert
