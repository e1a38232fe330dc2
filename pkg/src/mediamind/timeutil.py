"""RFC 3339 timestamp helpers.

Every datetime handled by this package is timezone-aware and normalized to
UTC. The canonical rendering (used for content ids and all wire formats) is
``YYYY-MM-DDTHH:MM:SSZ``, with a fractional-second part only when non-zero.
"""

from datetime import date, datetime, timezone

from .errors import ValidationError


def parse_rfc3339(value: str) -> datetime:
    """Parse an RFC 3339 timestamp into an aware UTC datetime."""
    if not isinstance(value, str) or not value.strip():
        raise ValidationError(f"invalid timestamp: {value!r}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(text)
    except ValueError as exc:
        raise ValidationError(f"invalid RFC 3339 timestamp: {value!r}") from exc
    if dt.tzinfo is None:
        raise ValidationError(f"timestamp lacks a UTC offset: {value!r}")
    return dt.astimezone(timezone.utc)


def format_rfc3339(dt: datetime) -> str:
    """Canonical rendering: UTC, 'Z' suffix, fraction only when non-zero."""
    if dt.tzinfo is None:
        raise ValidationError("refusing to format a naive datetime")
    dt = dt.astimezone(timezone.utc)
    text = dt.strftime("%Y-%m-%dT%H:%M:%S")
    if dt.microsecond:
        text += f".{dt.microsecond:06d}".rstrip("0")
    return text + "Z"


def parse_date_or_datetime(value: str) -> datetime:
    """Accept either a full RFC 3339 timestamp or a bare UTC date (midnight)."""
    text = value.strip()
    if len(text) == 10:
        try:
            d = date.fromisoformat(text)
        except ValueError as exc:
            raise ValidationError(f"invalid date: {value!r}") from exc
        return datetime(d.year, d.month, d.day, tzinfo=timezone.utc)
    return parse_rfc3339(text)


def utc_day(dt: datetime) -> date:
    """UTC calendar day containing the instant; buckets run [00:00, 24:00)."""
    return dt.astimezone(timezone.utc).date()


def utc_now() -> datetime:
    return datetime.now(timezone.utc)
