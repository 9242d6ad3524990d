"""Domain model: terms, definitions, examples, comments, votes, users.

All types are immutable values; mutation happens only through operations the
persistence layer serializes per term. Invariants that span collections
(single AI definition per term, one vote row per user and definition, label
uniqueness) are enforced by the operation layer and re-checked during replay.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum

from lexhive.core.errors import InvalidValue


class ActorKind(str, Enum):
    HUMAN = "human"
    AI = "ai"


class TermStatus(str, Enum):
    ACTIVE = "active"
    ARCHIVED = "archived"


class DefinitionKind(str, Enum):
    HUMAN = "human"
    AI = "ai"


class CommentDisposition(str, Enum):
    FEEDBACK = "feedback"
    DISCUSSION = "discussion"


class UserRole(str, Enum):
    MEMBER = "member"
    ADMIN = "admin"


class Phase(str, Enum):
    """Negotiation phase of the human/AI refinement loop for one term."""

    NO_AI_DEFINITION = "no_ai_definition"
    AI_PROPOSED = "ai_proposed"
    FEEDBACK_PENDING = "feedback_pending"
    CONVERGED = "converged"
    STALLED = "stalled"


@dataclass(frozen=True)
class ActorRef:
    kind: ActorKind
    id: str

    def to_dict(self) -> dict[str, str]:
        return {"kind": self.kind.value, "id": self.id}


# Attribution for operations triggered by the platform itself rather than a
# participant (e.g. convergence evaluation).
SYSTEM_ACTOR = ActorRef(kind=ActorKind.HUMAN, id="system")


@dataclass(frozen=True)
class Term:
    id: str
    label: str
    tags: frozenset[str]
    created_by: ActorRef
    created_at: datetime
    status: TermStatus = TermStatus.ACTIVE


@dataclass(frozen=True)
class Definition:
    id: str
    term_id: str
    body: str
    author: ActorRef
    kind: DefinitionKind
    version: int
    created_at: datetime
    updated_at: datetime


@dataclass(frozen=True)
class Example:
    id: str
    term_id: str
    body: str
    author: ActorRef
    created_at: datetime


@dataclass(frozen=True)
class Comment:
    id: str
    target_definition_id: str
    author: ActorRef
    body: str
    created_at: datetime
    disposition: CommentDisposition


@dataclass(frozen=True)
class Vote:
    user_id: str
    definition_id: str
    value: int
    cast_at: datetime

    def __post_init__(self) -> None:
        if self.value not in (1, -1):
            raise InvalidValue(f"vote value must be +1 or -1, got {self.value}")


@dataclass(frozen=True)
class User:
    id: str
    display_name: str
    identity_subject: str
    role: UserRole = UserRole.MEMBER


@dataclass(frozen=True)
class VoteTally:
    up: int = 0
    down: int = 0

    @property
    def score(self) -> int:
        return self.up - self.down

    def to_dict(self) -> dict[str, int]:
        return {"up": self.up, "down": self.down, "score": self.score}


@dataclass(frozen=True)
class NegotiationState:
    term_id: str
    phase: Phase = Phase.NO_AI_DEFINITION
    pending_feedback: tuple[str, ...] = ()  # comment ids, submission order
    last_activity: datetime | None = None


@dataclass
class TermState:
    """Full reconstructed state of one term.

    Produced identically by event replay and by loading entity rows; the
    consistency audit compares the two. Collection order is creation order.
    """

    term: Term
    definitions: dict[str, Definition] = field(default_factory=dict)
    examples: list[Example] = field(default_factory=list)
    comments: dict[str, list[Comment]] = field(default_factory=dict)
    votes: dict[str, dict[str, Vote]] = field(default_factory=dict)
    tallies: dict[str, VoteTally] = field(default_factory=dict)
    negotiation: NegotiationState = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.negotiation is None:
            self.negotiation = NegotiationState(term_id=self.term.id)

    def ai_definition(self) -> Definition | None:
        for definition in self.definitions.values():
            if definition.kind is DefinitionKind.AI:
                return definition
        return None

    def human_definitions(self) -> list[Definition]:
        return [d for d in self.definitions.values() if d.kind is DefinitionKind.HUMAN]

    def comments_for(self, definition_id: str) -> list[Comment]:
        return self.comments.get(definition_id, [])

    def tally_for(self, definition_id: str) -> VoteTally:
        return self.tallies.get(definition_id, VoteTally())


def fold_label(label: str) -> str:
    """Case-folding used for label uniqueness checks."""
    return label.strip().casefold()


def fold_tag(tag: str) -> str:
    """Tags are trimmed and lowercased on ingest."""
    return tag.strip().lower()


def with_tag(term: Term, tag: str) -> Term:
    return replace(term, tags=term.tags | {tag})
