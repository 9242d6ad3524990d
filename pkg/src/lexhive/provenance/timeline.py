"""Human-readable timeline entries for a term's provenance view.

Summary strings follow one fixed template per action so rendered timelines
are stable golden-file material. Entries flag ``actor_kind`` so renderers
can distinguish AI activity from human activity (the views read either
newest-first or oldest-first).
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Any, Mapping, Sequence

from lexhive.core.models import ActorKind
from lexhive.provenance.events import Action, ProvenanceEvent
from lexhive.serialize import iso

EXCERPT_LIMIT = 80


class TimelineOrder(str, Enum):
    OLDEST_FIRST = "oldest_first"
    NEWEST_FIRST = "newest_first"


@dataclass(frozen=True)
class TimelineEntry:
    seq: int
    occurred_at: datetime
    actor_kind: ActorKind
    action: Action
    summary: str
    payload_excerpt: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "seq": self.seq,
            "occurred_at": iso(self.occurred_at),
            "actor_kind": self.actor_kind.value,
            "action": self.action.value,
            "summary": self.summary,
            "payload_excerpt": self.payload_excerpt,
        }


_TEMPLATES: dict[Action, str] = {
    Action.TERM_CREATED: "{who} created the term",
    Action.DEFINITION_ADDED: "{who} added a definition",
    Action.DEFINITION_REVISED: "{who} revised the definition",
    Action.EXAMPLE_ADDED: "{who} added an example",
    Action.COMMENT_ADDED: "{who} commented on a definition",
    Action.VOTE_CAST: "{who} voted {direction} on a definition",
    Action.TAG_ADDED: "{who} tagged the term",
    Action.AI_GENERATION_REQUESTED: "{who} requested an AI definition",
    Action.AI_GENERATION_SUCCEEDED: "AI produced a definition draft",
    Action.AI_GENERATION_FAILED: "AI generation failed",
    Action.NEGOTIATION_STATE_CHANGED: "negotiation phase changed to {phase}",
}

# Payload field shown as the excerpt, per action.
_EXCERPT_FIELDS: dict[Action, str] = {
    Action.TERM_CREATED: "label",
    Action.DEFINITION_ADDED: "body",
    Action.DEFINITION_REVISED: "new_body",
    Action.EXAMPLE_ADDED: "body",
    Action.COMMENT_ADDED: "body",
    Action.TAG_ADDED: "tag",
    Action.AI_GENERATION_REQUESTED: "prompt",
    Action.AI_GENERATION_SUCCEEDED: "body",
    Action.AI_GENERATION_FAILED: "failure_reason",
    Action.NEGOTIATION_STATE_CHANGED: "reason",
}


def _excerpt(action: Action, payload: Mapping[str, Any]) -> str:
    if action is Action.VOTE_CAST:
        return "+1" if payload["value"] == 1 else "-1"
    text = str(payload.get(_EXCERPT_FIELDS.get(action, ""), ""))
    text = " ".join(text.split())
    if len(text) > EXCERPT_LIMIT:
        return text[: EXCERPT_LIMIT - 3] + "..."
    return text


def entry_for(event: ProvenanceEvent) -> TimelineEntry:
    who = "AI" if event.actor.kind is ActorKind.AI else event.actor.id
    template = _TEMPLATES[event.action]
    summary = template.format(
        who=who,
        direction="up" if event.payload.get("value") == 1 else "down",
        phase=event.payload.get("phase", ""),
    )
    return TimelineEntry(
        seq=event.seq or 0,
        occurred_at=event.occurred_at,
        actor_kind=event.actor.kind,
        action=event.action,
        summary=summary,
        payload_excerpt=_excerpt(event.action, event.payload),
    )


def render_timeline(
    events: Sequence[ProvenanceEvent],
    order: TimelineOrder = TimelineOrder.NEWEST_FIRST,
) -> list[TimelineEntry]:
    """Timeline entries for one term's events, sorted by seq in the given order."""
    entries = [entry_for(e) for e in sorted(events, key=lambda e: e.seq or 0)]
    if order is TimelineOrder.NEWEST_FIRST:
        entries.reverse()
    return entries
