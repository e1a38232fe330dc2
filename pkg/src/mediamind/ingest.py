"""Media items, corpus loading, and the feed-polling contract.

A corpus is a UTF-8 JSONL file with one media item per line. Item identity
is content-addressed: the first 16 hex characters of SHA-256 over
``"<url>|<published_at RFC3339>"``, which makes re-ingestion of the same
content idempotent.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from .errors import ValidationError
from .timeutil import format_rfc3339, parse_rfc3339

MODALITIES = ("text", "audio", "video", "image")
SOURCES = ("fixture-feed", "local-file")

_CORPUS_KEYS = ("url", "title", "published_at", "language", "modality")


def item_id(url: str, published_at: datetime) -> str:
    """Derive the 16-hex-char content id for (url, published_at)."""
    if not url:
        raise ValidationError("url must be non-empty")
    canonical = f"{url}|{format_rfc3339(published_at)}"
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


@dataclass
class MediaItem:
    """One piece of source content.

    ``body_text`` is required for text items; ``transcript_sidecar`` (a path
    to a UTF-8 text file standing in for speech recognition output) is
    required for audio and video items. Image items carry neither.
    """

    id: str
    source: str
    url: str
    title: str
    published_at: datetime
    language: str
    modality: str
    body_text: str | None = None
    transcript_sidecar: str | None = None

    def validate(self) -> None:
        if self.source not in SOURCES:
            raise ValidationError(f"unknown source {self.source!r}")
        if self.modality not in MODALITIES:
            raise ValidationError(f"unknown modality {self.modality!r}")
        if not self.url:
            raise ValidationError("url must be non-empty")
        if not self.language:
            raise ValidationError("language tag must be non-empty ('und' is permitted)")
        if self.published_at.tzinfo is None:
            raise ValidationError("published_at must be timezone-aware UTC")
        derived = item_id(self.url, self.published_at)
        if self.id != derived:
            raise ValidationError(f"id {self.id!r} does not match derived id {derived!r}")
        if self.modality == "text" and self.body_text is None:
            raise ValidationError("body_text is required for modality=text")
        if self.modality in ("audio", "video") and not self.transcript_sidecar:
            raise ValidationError(f"transcript_sidecar is required for modality={self.modality}")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source": self.source,
            "url": self.url,
            "title": self.title,
            "published_at": format_rfc3339(self.published_at),
            "language": self.language,
            "modality": self.modality,
            "body_text": self.body_text,
            "transcript_sidecar": self.transcript_sidecar,
        }

    @classmethod
    def from_dict(cls, data: dict) -> MediaItem:
        item = cls(
            id=data["id"],
            source=data["source"],
            url=data["url"],
            title=data["title"],
            published_at=parse_rfc3339(data["published_at"]),
            language=data["language"],
            modality=data["modality"],
            body_text=data.get("body_text"),
            transcript_sidecar=data.get("transcript_sidecar"),
        )
        item.validate()
        return item


def make_item(
    source: str,
    url: str,
    title: str,
    published_at: datetime,
    language: str,
    modality: str,
    body_text: str | None = None,
    transcript_sidecar: str | None = None,
) -> MediaItem:
    """Build a validated MediaItem with its id derived from url and timestamp."""
    item = MediaItem(
        id=item_id(url, published_at),
        source=source,
        url=url,
        title=title,
        published_at=published_at,
        language=language,
        modality=modality,
        body_text=body_text,
        transcript_sidecar=transcript_sidecar,
    )
    item.validate()
    return item


def item_from_corpus_line(raw: dict, source: str = "local-file", sidecar_base: Path | None = None) -> MediaItem:
    """Build an item from one parsed corpus-line object.

    Unknown keys are ignored. An explicit ``id`` key, when present, must match
    the derived id. Relative sidecar paths are resolved against
    ``sidecar_base`` when given.
    """
    missing = [k for k in _CORPUS_KEYS if k not in raw]
    if missing:
        raise ValidationError(f"missing keys: {', '.join(missing)}")
    published_at = parse_rfc3339(raw["published_at"])
    sidecar = raw.get("transcript_sidecar")
    if sidecar is not None:
        sidecar = str(sidecar)
        if sidecar_base is not None and not Path(sidecar).is_absolute():
            sidecar = str(sidecar_base / sidecar)
    item = make_item(
        source=source,
        url=str(raw["url"]),
        title=str(raw["title"]),
        published_at=published_at,
        language=str(raw["language"]),
        modality=str(raw["modality"]),
        body_text=raw.get("body_text"),
        transcript_sidecar=sidecar,
    )
    if "id" in raw and raw["id"] != item.id:
        raise ValidationError(f"id {raw['id']!r} does not match derived id {item.id!r}")
    return item


def load_corpus(path: str | Path, source: str = "local-file") -> list[MediaItem]:
    """Load a JSONL corpus, preserving file order.

    Every item is validated; errors name the offending line. Loading is a pure
    function of the file bytes.
    """
    path = Path(path)
    items: list[MediaItem] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path.name}:{lineno}: malformed JSON: {exc.msg}") from exc
            if not isinstance(raw, dict):
                raise ValidationError(f"{path.name}:{lineno}: expected a JSON object")
            try:
                items.append(item_from_corpus_line(raw, source=source, sidecar_base=path.parent))
            except ValidationError as exc:
                raise ValidationError(f"{path.name}:{lineno}: {exc}") from exc
    return items


@dataclass
class SourceDescriptor:
    """A pollable content source. Only the fixture feed kind exists."""

    source_id: str
    kind: str
    path: str
    poll_interval: float

    def validate(self) -> None:
        if not self.source_id:
            raise ValidationError("source_id must be non-empty")
        if self.kind != "fixture-feed":
            raise ValidationError(f"unknown source kind {self.kind!r}")
        if self.poll_interval <= 0:
            raise ValidationError("poll_interval must be positive")


def poll_source(desc: SourceDescriptor, since: datetime) -> list[MediaItem]:
    """Return items published strictly after ``since``.

    Results are sorted ascending by (published_at, id) so repeated polls are
    deterministic. Late-arriving items are picked up on the next poll.
    """
    desc.validate()
    items = load_corpus(desc.path, source="fixture-feed")
    newer = [item for item in items if item.published_at > since]
    newer.sort(key=lambda item: (item.published_at, item.id))
    return newer
