"""Deterministic reconstruction of term state from its event history.

``replay`` is a pure function: the same event list always yields an
identical state, and live state is maintained by folding the same
``apply_event`` the replayer uses, so the two can never drift silently.
Integrity violations (missing creation event, version gaps, a second AI
definition) surface as ``CorruptHistory``.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Any, Iterable, Sequence

from lexhive.core.errors import CorruptHistory
from lexhive.core.models import (
    ActorKind,
    ActorRef,
    Comment,
    CommentDisposition,
    Definition,
    DefinitionKind,
    Example,
    NegotiationState,
    Phase,
    Term,
    TermState,
    TermStatus,
    Vote,
    with_tag,
)
from lexhive.core.ops import apply_vote_to_tally
from lexhive.provenance.events import Action, ProvenanceEvent
from lexhive.serialize import canonical_json, iso


def apply_event(state: TermState | None, event: ProvenanceEvent) -> TermState:
    """Fold one event into the term state (mutates and returns ``state``).

    The negotiation phase moves to ``ai_proposed`` when the AI definition
    lands; all other phase changes arrive as explicit
    ``negotiation_state_changed`` events carrying phase and queue.
    """
    payload = event.payload
    if event.action is Action.TERM_CREATED:
        if state is not None:
            raise CorruptHistory("term_created must be the first event of a history")
        creator = payload["created_by"]
        term = Term(
            id=event.term_id,
            label=payload["label"],
            tags=frozenset(payload["tags"]),
            created_by=ActorRef(kind=ActorKind(creator["kind"]), id=creator["id"]),
            created_at=event.occurred_at,
            status=TermStatus.ACTIVE,
        )
        state = TermState(term=term)
        state.negotiation = replace(state.negotiation, last_activity=event.occurred_at)
        return state

    if state is None:
        raise CorruptHistory("history does not begin with term_created")

    if event.action is Action.DEFINITION_ADDED:
        kind = DefinitionKind(payload["kind"])
        if kind is DefinitionKind.AI and state.ai_definition() is not None:
            raise CorruptHistory("second AI definition encountered mid-replay")
        author = payload["author"]
        definition = Definition(
            id=payload["definition_id"],
            term_id=event.term_id,
            body=payload["body"],
            author=ActorRef(kind=ActorKind(author["kind"]), id=author["id"]),
            kind=kind,
            version=1,
            created_at=event.occurred_at,
            updated_at=event.occurred_at,
        )
        state.definitions[definition.id] = definition
        if kind is DefinitionKind.AI:
            state.negotiation = replace(
                state.negotiation, phase=Phase.AI_PROPOSED, pending_feedback=()
            )

    elif event.action is Action.DEFINITION_REVISED:
        definition = state.definitions.get(payload["definition_id"])
        if definition is None:
            raise CorruptHistory(f"revision of unknown definition {payload['definition_id']}")
        if payload["version"] != definition.version + 1:
            raise CorruptHistory(
                f"version gap on {definition.id}: "
                f"{definition.version} -> {payload['version']}"
            )
        if payload["prior_body"] != definition.body:
            raise CorruptHistory(f"prior_body mismatch on {definition.id}")
        state.definitions[definition.id] = replace(
            definition,
            body=payload["new_body"],
            version=payload["version"],
            updated_at=event.occurred_at,
        )

    elif event.action is Action.EXAMPLE_ADDED:
        state.examples.append(
            Example(
                id=payload["example_id"],
                term_id=event.term_id,
                body=payload["body"],
                author=event.actor,
                created_at=event.occurred_at,
            )
        )

    elif event.action is Action.COMMENT_ADDED:
        if payload["definition_id"] not in state.definitions:
            raise CorruptHistory(f"comment on unknown definition {payload['definition_id']}")
        comment = Comment(
            id=payload["comment_id"],
            target_definition_id=payload["definition_id"],
            author=event.actor,
            body=payload["body"],
            created_at=event.occurred_at,
            disposition=CommentDisposition(payload["disposition"]),
        )
        state.comments.setdefault(comment.target_definition_id, []).append(comment)

    elif event.action is Action.VOTE_CAST:
        definition_id = payload["definition_id"]
        if definition_id not in state.definitions:
            raise CorruptHistory(f"vote on unknown definition {definition_id}")
        rows = state.votes.setdefault(definition_id, {})
        previous = rows.get(payload["user_id"])
        rows[payload["user_id"]] = Vote(
            user_id=payload["user_id"],
            definition_id=definition_id,
            value=payload["value"],
            cast_at=event.occurred_at,
        )
        state.tallies[definition_id] = apply_vote_to_tally(
            state.tally_for(definition_id),
            previous.value if previous else None,
            payload["value"],
        )

    elif event.action is Action.TAG_ADDED:
        state.term = with_tag(state.term, payload["tag"])

    elif event.action in (
        Action.AI_GENERATION_REQUESTED,
        Action.AI_GENERATION_SUCCEEDED,
        Action.AI_GENERATION_FAILED,
    ):
        pass  # activity only; any definition change arrives as its own event

    elif event.action is Action.NEGOTIATION_STATE_CHANGED:
        known = {c.id for comments in state.comments.values() for c in comments}
        pending = tuple(payload["pending_feedback"])
        unknown = [cid for cid in pending if cid not in known]
        if unknown:
            raise CorruptHistory(f"negotiation queue references unknown comments {unknown}")
        state.negotiation = replace(
            state.negotiation, phase=Phase(payload["phase"]), pending_feedback=pending
        )

    state.negotiation = replace(state.negotiation, last_activity=event.occurred_at)
    return state


def replay(events: Sequence[ProvenanceEvent]) -> TermState:
    """Rebuild a term from its complete, seq-ordered history."""
    if not events:
        raise CorruptHistory("empty history")
    state: TermState | None = None
    last_seq = 0
    for event in events:
        if event.seq is not None:
            if event.seq <= last_seq:
                raise CorruptHistory(f"seq not strictly increasing at {event.seq}")
            last_seq = event.seq
        if state is not None and event.term_id != state.term.id:
            raise CorruptHistory(f"foreign event for term {event.term_id}")
        state = apply_event(state, event)
    assert state is not None
    return state


def state_to_dict(state: TermState) -> dict[str, Any]:
    """Plain-data view of a term state, suitable for canonical comparison."""
    return {
        "term": {
            "id": state.term.id,
            "label": state.term.label,
            "tags": sorted(state.term.tags),
            "created_by": state.term.created_by.to_dict(),
            "created_at": iso(state.term.created_at),
            "status": state.term.status.value,
        },
        "definitions": [
            {
                "id": d.id,
                "term_id": d.term_id,
                "body": d.body,
                "author": d.author.to_dict(),
                "kind": d.kind.value,
                "version": d.version,
                "created_at": iso(d.created_at),
                "updated_at": iso(d.updated_at),
            }
            for d in state.definitions.values()
        ],
        "examples": [
            {
                "id": e.id,
                "term_id": e.term_id,
                "body": e.body,
                "author": e.author.to_dict(),
                "created_at": iso(e.created_at),
            }
            for e in state.examples
        ],
        "comments": {
            definition_id: [
                {
                    "id": c.id,
                    "target_definition_id": c.target_definition_id,
                    "author": c.author.to_dict(),
                    "body": c.body,
                    "created_at": iso(c.created_at),
                    "disposition": c.disposition.value,
                }
                for c in comments
            ]
            for definition_id, comments in state.comments.items()
            if comments
        },
        "votes": {
            definition_id: {
                user_id: {"value": v.value, "cast_at": iso(v.cast_at)}
                for user_id, v in rows.items()
            }
            for definition_id, rows in state.votes.items()
            if rows
        },
        "tallies": {
            definition_id: tally.to_dict()
            for definition_id, tally in state.tallies.items()
            if tally.up or tally.down
        },
        "negotiation": {
            "term_id": state.negotiation.term_id,
            "phase": state.negotiation.phase.value,
            "pending_feedback": list(state.negotiation.pending_feedback),
            "last_activity": (
                iso(state.negotiation.last_activity)
                if state.negotiation.last_activity
                else None
            ),
        },
    }


def canonical_state(state: TermState) -> str:
    return canonical_json(state_to_dict(state))


def fold(events: Iterable[ProvenanceEvent], state: TermState | None = None) -> TermState:
    """Apply events in order onto an existing (or empty) state."""
    for event in events:
        state = apply_event(state, event)
    if state is None:
        raise CorruptHistory("empty history")
    return state
