from datetime import datetime, timezone

import pytest

from lexhive.core.errors import InvalidValue
from lexhive.core.models import (
    ActorKind,
    ActorRef,
    DefinitionKind,
    Phase,
    SYSTEM_ACTOR,
    Term,
    TermState,
    TermStatus,
    Vote,
    VoteTally,
    fold_label,
    fold_tag,
    with_tag,
)

NOW = datetime(2025, 6, 2, 9, 0, tzinfo=timezone.utc)


def _term(label: str = "widget") -> Term:
    return Term(
        id="t-1",
        label=label,
        tags=frozenset(),
        created_by=ActorRef(kind=ActorKind.HUMAN, id="u-1"),
        created_at=NOW,
    )


def test_fold_label_trims_and_casefolds():
    assert fold_label("  Grain Boundary ") == "grain boundary"
    assert fold_label("STRASSE") == fold_label("straße")  # casefold, not lower


def test_fold_tag_trims_and_lowercases():
    assert fold_tag("  Materials ") == "materials"


def test_with_tag_returns_new_term():
    term = _term()
    tagged = with_tag(term, "physics")
    assert tagged.tags == frozenset({"physics"})
    assert term.tags == frozenset()  # original untouched


def test_vote_value_is_checked():
    Vote(user_id="u-1", definition_id="d-1", value=1, cast_at=NOW)
    Vote(user_id="u-1", definition_id="d-1", value=-1, cast_at=NOW)
    with pytest.raises(InvalidValue):
        Vote(user_id="u-1", definition_id="d-1", value=0, cast_at=NOW)
    with pytest.raises(InvalidValue):
        Vote(user_id="u-1", definition_id="d-1", value=2, cast_at=NOW)


def test_tally_score():
    assert VoteTally(up=3, down=1).score == 2
    assert VoteTally().to_dict() == {"up": 0, "down": 0, "score": 0}


def test_fresh_state_starts_without_ai_definition():
    state = TermState(term=_term())
    assert state.negotiation.phase is Phase.NO_AI_DEFINITION
    assert state.negotiation.term_id == "t-1"
    assert state.ai_definition() is None
    assert state.human_definitions() == []
    assert state.comments_for("d-1") == []
    assert state.tally_for("d-1") == VoteTally()


def test_system_actor_shape():
    assert SYSTEM_ACTOR.id == "system"
    assert SYSTEM_ACTOR.to_dict() == {"kind": "human", "id": "system"}


def test_enums_round_trip_their_wire_values():
    assert Phase("feedback_pending") is Phase.FEEDBACK_PENDING
    assert DefinitionKind("ai") is DefinitionKind.AI
    assert TermStatus("archived") is TermStatus.ARCHIVED
