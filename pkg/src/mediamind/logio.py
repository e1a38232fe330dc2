"""Append-only JSONL log replay with torn-tail recovery.

A torn trailing line (interrupted write) was never durable, so it is dropped
and the file truncated back to the last complete line; corruption anywhere
else is a hard error.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from .errors import StorageError, ValidationError

logger = logging.getLogger(__name__)


def replay_jsonl(path: Path, apply, label: str) -> None:
    """Apply every JSON line in order; truncate a torn tail in place."""
    if not path.is_file():
        return
    data = path.read_bytes()
    lines = data.split(b"\n")
    last_content = max((i for i, raw in enumerate(lines) if raw.strip()), default=-1)
    offset = 0
    for i, raw in enumerate(lines):
        line_start = offset
        offset += len(raw) + 1
        if not raw.strip():
            continue
        try:
            apply(json.loads(raw.decode("utf-8")))
        except (json.JSONDecodeError, UnicodeDecodeError, KeyError, TypeError, ValidationError) as exc:
            if i == last_content:
                logger.warning("%s: dropping torn trailing line: %s", label, exc)
                with open(path, "r+b") as fh:
                    fh.truncate(line_start)
                return
            raise StorageError(f"{label}:{i + 1}: corrupt log: {exc}") from exc
