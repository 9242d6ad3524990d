"""Tally math and ranking, checked against brute-force recomputation."""

from datetime import datetime, timedelta, timezone

from hypothesis import given, strategies as st

from lexhive.core.models import (
    ActorKind,
    ActorRef,
    Definition,
    DefinitionKind,
    Term,
    TermState,
    Vote,
    VoteTally,
)
from lexhive.core.ops import (
    apply_vote_to_tally,
    rank_definitions,
    rank_key,
    recompute_tally,
)

NOW = datetime(2025, 6, 2, 9, 0, tzinfo=timezone.utc)
ACTOR = ActorRef(kind=ActorKind.HUMAN, id="u-1")


def _definition(definition_id: str, minutes: int = 0) -> Definition:
    return Definition(
        id=definition_id,
        term_id="t-1",
        body=f"body of {definition_id}",
        author=ACTOR,
        kind=DefinitionKind.HUMAN,
        version=1,
        created_at=NOW + timedelta(minutes=minutes),
        updated_at=NOW + timedelta(minutes=minutes),
    )


def _state(*definitions: Definition) -> TermState:
    term = Term(id="t-1", label="widget", tags=frozenset(), created_by=ACTOR, created_at=NOW)
    state = TermState(term=term)
    for d in definitions:
        state.definitions[d.id] = d
    return state


def test_recompute_counts_by_sign():
    votes = [
        Vote(user_id=f"u-{i}", definition_id="d-1", value=v, cast_at=NOW)
        for i, v in enumerate([1, 1, -1, 1])
    ]
    assert recompute_tally(votes) == VoteTally(up=3, down=1)


def test_apply_vote_flip_and_repeat():
    tally = VoteTally()
    tally = apply_vote_to_tally(tally, None, 1)
    assert tally == VoteTally(up=1, down=0)
    tally = apply_vote_to_tally(tally, 1, -1)  # flip
    assert tally == VoteTally(up=0, down=1)
    tally = apply_vote_to_tally(tally, -1, -1)  # re-cast same value
    assert tally == VoteTally(up=0, down=1)


# vote streams: (user, value) pairs; re-votes by the same user replace
vote_streams = st.lists(
    st.tuples(st.integers(min_value=0, max_value=7), st.sampled_from([1, -1])),
    max_size=60,
)


@given(vote_streams)
def test_incremental_tally_matches_brute_force(stream):
    """Folding votes one at a time must equal recomputing from last-vote rows."""
    tally = VoteTally()
    rows: dict[str, Vote] = {}
    for i, (user, value) in enumerate(stream):
        user_id = f"u-{user}"
        previous = rows.get(user_id)
        tally = apply_vote_to_tally(tally, previous.value if previous else None, value)
        rows[user_id] = Vote(
            user_id=user_id,
            definition_id="d-1",
            value=value,
            cast_at=NOW + timedelta(seconds=i),
        )
    assert tally == recompute_tally(rows.values())


def test_rank_orders_by_score_then_age_then_id():
    older, newer, third = _definition("d-2", 0), _definition("d-1", 5), _definition("d-3", 5)
    state = _state(older, newer, third)
    state.tallies["d-1"] = VoteTally(up=2, down=0)
    state.tallies["d-3"] = VoteTally(up=2, down=0)
    ranked = [d.id for d, _ in rank_definitions(state)]
    # d-1 and d-3 tie on score and created_at; id breaks the tie
    assert ranked == ["d-1", "d-3", "d-2"]


def test_rank_key_is_deterministic():
    d = _definition("d-1")
    assert rank_key(d, VoteTally(up=1, down=0)) == (-1, d.created_at, "d-1")
