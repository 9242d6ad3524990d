"""Append-only provenance events.

One immutable record per human or AI action, totally ordered by a global
``seq``. Ordering authority is always ``seq``; timestamps are descriptive.
Revision payloads carry full before/after bodies so histories read without
needing diff tooling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from enum import Enum
from typing import Any, Iterable, Mapping

from lexhive.core.errors import MalformedPayload
from lexhive.core.models import ActorKind, ActorRef
from lexhive.serialize import iso, parse_iso

# Timestamps may lag the log head by at most this much (distributed clock
# slop); anything older is rejected at append.
CLOCK_SKEW_TOLERANCE = timedelta(seconds=5)


class Action(str, Enum):
    TERM_CREATED = "term_created"
    DEFINITION_ADDED = "definition_added"
    DEFINITION_REVISED = "definition_revised"
    EXAMPLE_ADDED = "example_added"
    COMMENT_ADDED = "comment_added"
    VOTE_CAST = "vote_cast"
    TAG_ADDED = "tag_added"
    AI_GENERATION_REQUESTED = "ai_generation_requested"
    AI_GENERATION_SUCCEEDED = "ai_generation_succeeded"
    AI_GENERATION_FAILED = "ai_generation_failed"
    NEGOTIATION_STATE_CHANGED = "negotiation_state_changed"


# Required payload fields and their types, per action.
PAYLOAD_SCHEMAS: dict[Action, dict[str, type | tuple[type, ...]]] = {
    Action.TERM_CREATED: {"label": str, "tags": list, "created_by": dict},
    Action.DEFINITION_ADDED: {"definition_id": str, "body": str, "kind": str, "author": dict},
    Action.DEFINITION_REVISED: {
        "definition_id": str,
        "prior_body": str,
        "new_body": str,
        "version": int,
    },
    Action.EXAMPLE_ADDED: {"example_id": str, "body": str},
    Action.COMMENT_ADDED: {
        "comment_id": str,
        "definition_id": str,
        "body": str,
        "disposition": str,
    },
    Action.VOTE_CAST: {"user_id": str, "definition_id": str, "value": int},
    Action.TAG_ADDED: {"tag": str},
    Action.AI_GENERATION_REQUESTED: {
        "generation_id": str,
        "backend_id": str,
        "prompt": str,
        "template_version": str,
        "feedback_ids": list,
    },
    Action.AI_GENERATION_SUCCEEDED: {
        "generation_id": str,
        "backend_id": str,
        "body": str,
        "latency_ms": int,
    },
    Action.AI_GENERATION_FAILED: {
        "generation_id": str,
        "backend_id": str,
        "failure_reason": str,
        "latency_ms": int,
    },
    Action.NEGOTIATION_STATE_CHANGED: {
        "phase": str,
        "pending_feedback": list,
        "reason": str,
    },
}


@dataclass(frozen=True)
class ProvenanceEvent:
    term_id: str
    actor: ActorRef
    action: Action
    payload: Mapping[str, Any]
    occurred_at: datetime
    seq: int | None = None  # assigned at append

    def with_seq(self, seq: int) -> "ProvenanceEvent":
        return replace(self, seq=seq)

    def to_record(self) -> dict[str, Any]:
        """Wire/export form; field order is the documented canonical order."""
        return {
            "seq": self.seq,
            "term_id": self.term_id,
            "actor": self.actor.to_dict(),
            "action": self.action.value,
            "payload": dict(self.payload),
            "occurred_at": iso(self.occurred_at),
        }

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "ProvenanceEvent":
        try:
            actor = ActorRef(kind=ActorKind(record["actor"]["kind"]), id=record["actor"]["id"])
            event = cls(
                term_id=record["term_id"],
                actor=actor,
                action=Action(record["action"]),
                payload=dict(record["payload"]),
                occurred_at=parse_iso(record["occurred_at"]),
                seq=record.get("seq"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedPayload(f"bad event record: {exc}") from exc
        validate_payload(event.action, event.payload)
        return event


def validate_payload(action: Action, payload: Mapping[str, Any]) -> None:
    """Reject payloads whose shape does not match the action."""
    schema = PAYLOAD_SCHEMAS[action]
    missing = sorted(key for key in schema if key not in payload)
    if missing:
        raise MalformedPayload(f"{action.value}: payload missing fields {missing}")
    for key, expected in schema.items():
        value = payload[key]
        if isinstance(value, bool) or not isinstance(value, expected):
            raise MalformedPayload(
                f"{action.value}: field {key!r} must be "
                f"{getattr(expected, '__name__', expected)}, got {type(value).__name__}"
            )


def to_jsonl(events: Iterable[ProvenanceEvent]) -> str:
    """Line-delimited export: one event per line, canonical field order."""
    return "".join(
        json.dumps(e.to_record(), ensure_ascii=False, separators=(", ", ": ")) + "\n"
        for e in events
    )


def from_jsonl(text: str) -> list[ProvenanceEvent]:
    events = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedPayload(f"line {lineno}: invalid JSON: {exc}") from exc
        events.append(ProvenanceEvent.from_record(record))
    return events
