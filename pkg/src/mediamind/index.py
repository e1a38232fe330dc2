"""Persistent media index: item/record storage plus semantic search.

Entries live in memory and, when a store directory is given, in append-only
JSONL segments named ``index-%06d.jsonl``. Each line is one upsert event
``{"item": ..., "record": ...|null, "version": n}``; replaying all segments
in order reproduces the latest state. A torn trailing line (interrupted
write) is skipped with a warning; every process opens a fresh segment so a
torn tail is never appended to. Embeddings are recomputed on load.

Search is an exact linear scan: every candidate is scored with cosine
similarity (see ``kernels``) and ranked by (score desc, item_id asc).
"""

from __future__ import annotations

import json
import logging
import os
import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from .embedding import Embedder
from .errors import StorageError, ValidationError
from .ingest import MediaItem
from .kernels import cosine_scores
from .pipeline import AnalysisRecord

logger = logging.getLogger(__name__)

SEGMENT_GLOB = "index-*.jsonl"
SNIPPET_CHARS = 160


@dataclass
class IndexEntry:
    item: MediaItem
    record: AnalysisRecord | None
    embedding: np.ndarray
    version: int


@dataclass
class QueryResult:
    item_id: str
    score: float
    snippet: str

    def to_dict(self) -> dict:
        return {"item_id": self.item_id, "score": self.score, "snippet": self.snippet}


@dataclass
class SearchFilters:
    language: str | None = None
    date_from: datetime | None = None
    date_to: datetime | None = None
    sentiment: str | None = None


def indexed_text(item: MediaItem, record: AnalysisRecord | None) -> str:
    """Title plus whatever transcript text is available so far."""
    transcript = record.transcript.text if record is not None else (item.body_text or "")
    return f"{item.title} {transcript}"


def _snippet(item: MediaItem, record: AnalysisRecord | None) -> str:
    transcript = record.transcript.text if record is not None else (item.body_text or "")
    return (transcript or item.title)[:SNIPPET_CHARS]


class MediaIndex:
    """Thread-safe index; writes are serialized, reads see whole entries."""

    def __init__(self, embedder: Embedder, store_dir: str | Path | None = None):
        self._embedder = embedder
        self._entries: dict[str, IndexEntry] = {}
        self._lock = threading.Lock()
        self._store_dir = Path(store_dir) if store_dir is not None else None
        self._segment_path: Path | None = None
        self._segment_file = None
        if self._store_dir is not None:
            self._store_dir.mkdir(parents=True, exist_ok=True)
            self._replay()

    @property
    def embedder(self) -> Embedder:
        return self._embedder

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def upsert(self, item: MediaItem, record: AnalysisRecord | None = None) -> IndexEntry:
        """Create or replace the entry for item.id; durable before returning."""
        item.validate()
        if record is not None and record.item_id != item.id:
            raise ValidationError(f"record item_id {record.item_id!r} does not match item id {item.id!r}")
        with self._lock:
            previous = self._entries.get(item.id)
            entry = IndexEntry(
                item=item,
                record=record,
                embedding=self._embedder.embed(indexed_text(item, record)),
                version=(previous.version + 1) if previous else 1,
            )
            if self._store_dir is not None:
                self._append_event(
                    {
                        "item": item.to_dict(),
                        "record": record.to_dict() if record is not None else None,
                        "version": entry.version,
                    }
                )
            self._entries[item.id] = entry
            return entry

    def get(self, item_id: str) -> IndexEntry | None:
        with self._lock:
            return self._entries.get(item_id)

    def entries(self) -> list[IndexEntry]:
        with self._lock:
            return list(self._entries.values())

    def analyzed(self) -> list[tuple[MediaItem, AnalysisRecord]]:
        """(item, record) pairs for every entry that has been analyzed."""
        with self._lock:
            return [(e.item, e.record) for e in self._entries.values() if e.record is not None]

    def search(self, query: str, k: int, filters: SearchFilters | None = None) -> list[QueryResult]:
        """Top-k entries by cosine similarity, ties broken by item_id.

        Filters restrict the candidate set before scoring; a sentiment filter
        only passes entries that have an analysis record.
        """
        if k < 0:
            raise ValidationError("k must be non-negative")
        candidates = [e for e in self.entries() if _passes(e, filters)]
        if k == 0 or not candidates:
            return []
        query_vec = self._embedder.embed(query)
        matrix = np.stack([e.embedding for e in candidates])
        scores = cosine_scores(matrix, query_vec)
        ranked = sorted(zip(candidates, scores), key=lambda pair: (-pair[1], pair[0].item.id))
        return [
            QueryResult(item_id=e.item.id, score=float(score), snippet=_snippet(e.item, e.record))
            for e, score in ranked[:k]
        ]

    # --- persistence ---

    def _append_event(self, event: dict) -> None:
        try:
            if self._segment_file is None:
                self._open_new_segment()
            line = json.dumps(event, ensure_ascii=False)
            self._segment_file.write(line + "\n")
            self._segment_file.flush()
            os.fsync(self._segment_file.fileno())
        except OSError as exc:
            raise StorageError(f"cannot append to index log: {exc}") from exc

    def _open_new_segment(self) -> None:
        existing = sorted(self._store_dir.glob(SEGMENT_GLOB))
        next_num = 1
        if existing:
            last = existing[-1].stem  # index-000007
            next_num = int(last.split("-")[1]) + 1
        self._segment_path = self._store_dir / f"index-{next_num:06d}.jsonl"
        self._segment_file = open(self._segment_path, "a", encoding="utf-8")

    def _replay(self) -> None:
        segments = sorted(self._store_dir.glob(SEGMENT_GLOB))
        for seg_idx, segment in enumerate(segments):
            last_segment = seg_idx == len(segments) - 1
            with open(segment, encoding="utf-8") as fh:
                lines = fh.readlines()
            for line_idx, line in enumerate(lines):
                if not line.strip():
                    continue
                try:
                    event = json.loads(line)
                    item = MediaItem.from_dict(event["item"])
                    record = AnalysisRecord.from_dict(event["record"]) if event.get("record") else None
                    version = int(event["version"])
                except (json.JSONDecodeError, KeyError, TypeError, ValidationError) as exc:
                    if last_segment and line_idx == len(lines) - 1:
                        logger.warning("skipping torn trailing line in %s: %s", segment.name, exc)
                        break
                    raise StorageError(f"{segment.name}:{line_idx + 1}: corrupt index log: {exc}") from exc
                self._entries[item.id] = IndexEntry(
                    item=item,
                    record=record,
                    embedding=self._embedder.embed(indexed_text(item, record)),
                    version=version,
                )

    def close(self) -> None:
        if self._segment_file is not None:
            self._segment_file.close()
            self._segment_file = None


def _passes(entry: IndexEntry, filters: SearchFilters | None) -> bool:
    if filters is None:
        return True
    if filters.language is not None and entry.item.language != filters.language:
        return False
    if filters.date_from is not None and entry.item.published_at < filters.date_from:
        return False
    if filters.date_to is not None and entry.item.published_at >= filters.date_to:
        return False
    if filters.sentiment is not None:
        if entry.record is None or entry.record.sentiment.label != filters.sentiment:
            return False
    return True
