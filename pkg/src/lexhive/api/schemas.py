"""Request validation models and response presenters.

Requests are validated with pydantic; responses are plain dicts built by
the presenter functions so the same shapes serve the HTTP layer, exports,
and test fixtures.
"""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

from lexhive.core.models import Comment, TermState, User
from lexhive.core.ops import rank_definitions
from lexhive.provenance.timeline import TimelineEntry
from lexhive.serialize import iso
from lexhive.store import DirectoryPage, SearchHit, TermAggregate


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LoginRequest(_Strict):
    assertion: dict[str, Any]


class TermCreate(_Strict):
    label: str
    tags: list[str] = Field(default_factory=list)


class TagAdd(_Strict):
    tag: str


class DefinitionCreate(_Strict):
    body: str


class ExampleCreate(_Strict):
    body: str


class CommentCreate(_Strict):
    body: str
    disposition: Literal["discussion", "feedback"] = "discussion"


class VoteSet(_Strict):
    # range-checked in the engine so a bad value maps to the domain error
    value: int


# -- presenters ----------------------------------------------------------


def user_out(user: User) -> dict[str, Any]:
    return {
        "id": user.id,
        "display_name": user.display_name,
        "role": user.role.value,
    }


def comment_out(comment: Comment) -> dict[str, Any]:
    return {
        "id": comment.id,
        "definition_id": comment.target_definition_id,
        "author": comment.author.to_dict(),
        "body": comment.body,
        "disposition": comment.disposition.value,
        "created_at": iso(comment.created_at),
    }


def example_out(state: TermState, example_id: str) -> dict[str, Any]:
    example = next(e for e in state.examples if e.id == example_id)
    return {
        "id": example.id,
        "body": example.body,
        "author": example.author.to_dict(),
        "created_at": iso(example.created_at),
    }


def definition_out(state: TermState, definition_id: str) -> dict[str, Any]:
    definition = state.definitions[definition_id]
    return {
        "id": definition.id,
        "body": definition.body,
        "author": definition.author.to_dict(),
        "kind": definition.kind.value,
        "version": definition.version,
        "created_at": iso(definition.created_at),
        "updated_at": iso(definition.updated_at),
        "tally": state.tally_for(definition.id).to_dict(),
        "comments": [
            comment_out(comment) for comment in state.comments_for(definition.id)
        ],
    }


def term_detail(aggregate: TermAggregate) -> dict[str, Any]:
    """Full term view; definitions come ranked by score, age, then id."""
    state = aggregate.state
    term = state.term
    return {
        "term": {
            "id": term.id,
            "label": term.label,
            "tags": sorted(term.tags),
            "status": term.status.value,
            "created_by": term.created_by.to_dict(),
            "created_at": iso(term.created_at),
        },
        "definitions": [
            definition_out(state, definition.id)
            for definition, _ in rank_definitions(state)
        ],
        "examples": [
            {
                "id": example.id,
                "body": example.body,
                "author": example.author.to_dict(),
                "created_at": iso(example.created_at),
            }
            for example in state.examples
        ],
        "negotiation": {
            "phase": state.negotiation.phase.value,
            "pending_feedback": list(state.negotiation.pending_feedback),
            "last_activity": (
                iso(state.negotiation.last_activity)
                if state.negotiation.last_activity
                else None
            ),
        },
        "version": aggregate.version,
    }


def directory_out(page: DirectoryPage) -> dict[str, Any]:
    return {
        "page": page.page,
        "page_size": page.page_size,
        "total": page.total,
        "terms": [
            {
                "id": entry.term_id,
                "label": entry.label,
                "tags": list(entry.tags),
                "definition_count": entry.definition_count,
                "example_count": entry.example_count,
                "phase": entry.phase.value,
                "created_at": entry.created_at,
            }
            for entry in page.entries
        ],
    }


def search_out(query: str, hits: list[SearchHit]) -> dict[str, Any]:
    return {
        "query": query,
        "hits": [
            {
                "term_id": hit.term_id,
                "label": hit.label,
                "matched": hit.matched,
                "excerpt": hit.excerpt,
                "tags": list(hit.tags),
            }
            for hit in hits
        ],
    }


def timeline_out(term_id: str, order: str, entries: list[TimelineEntry]) -> dict[str, Any]:
    return {
        "term_id": term_id,
        "order": order,
        "entries": [entry.to_dict() for entry in entries],
    }
