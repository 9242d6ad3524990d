"""Timestamp normalization and canonical JSON used across the package.

All timestamps are stored and transmitted as RFC 3339 UTC strings; canonical
JSON (sorted keys, compact separators) backs state-equality checks.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from typing import Any


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


def iso(dt: datetime) -> str:
    """Render a datetime as an RFC 3339 UTC string (offset form, +00:00)."""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).isoformat()


def parse_iso(text: str) -> datetime:
    """Parse an RFC 3339 timestamp, accepting both 'Z' and offset suffixes."""
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def canonical_json(value: Any) -> str:
    """Deterministic JSON: sorted keys, compact separators, UTF-8 passthrough."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
