"""Event records, replay integrity, and timeline rendering."""

from datetime import datetime, timedelta, timezone

import pytest

from lexhive.core.errors import CorruptHistory, MalformedPayload
from lexhive.core.models import ActorKind, ActorRef, Phase
from lexhive.provenance.events import (
    Action,
    ProvenanceEvent,
    from_jsonl,
    to_jsonl,
    validate_payload,
)
from lexhive.provenance.replay import canonical_state, fold, replay
from lexhive.provenance.timeline import (
    EXCERPT_LIMIT,
    TimelineOrder,
    entry_for,
    render_timeline,
)

NOW = datetime(2025, 6, 2, 9, 0, tzinfo=timezone.utc)
HUMAN = ActorRef(kind=ActorKind.HUMAN, id="u-1")
AI = ActorRef(kind=ActorKind.AI, id="mock")


def _ev(action: Action, payload: dict, *, seq: int, actor: ActorRef = HUMAN) -> ProvenanceEvent:
    return ProvenanceEvent(
        term_id="t-1",
        actor=actor,
        action=action,
        payload=payload,
        occurred_at=NOW + timedelta(minutes=seq),
        seq=seq,
    )


def _history() -> list[ProvenanceEvent]:
    return [
        _ev(
            Action.TERM_CREATED,
            {"label": "widget", "tags": ["tools"], "created_by": HUMAN.to_dict()},
            seq=1,
        ),
        _ev(
            Action.DEFINITION_ADDED,
            {
                "definition_id": "d-1",
                "body": "a small part",
                "kind": "human",
                "author": HUMAN.to_dict(),
            },
            seq=2,
        ),
        _ev(Action.EXAMPLE_ADDED, {"example_id": "x-1", "body": "fit the widget"}, seq=3),
        _ev(
            Action.DEFINITION_ADDED,
            {
                "definition_id": "d-2",
                "body": "machine draft",
                "kind": "ai",
                "author": AI.to_dict(),
            },
            seq=4,
            actor=AI,
        ),
        _ev(
            Action.VOTE_CAST,
            {"user_id": "u-1", "definition_id": "d-2", "value": 1},
            seq=5,
        ),
    ]


# -- event records -------------------------------------------------------


def test_record_field_order_is_canonical():
    record = _history()[0].to_record()
    assert list(record) == ["seq", "term_id", "actor", "action", "payload", "occurred_at"]


def test_jsonl_round_trip():
    events = _history()
    text = to_jsonl(events)
    assert text.count("\n") == len(events)
    assert from_jsonl(text) == events


def test_payload_missing_field_rejected():
    with pytest.raises(MalformedPayload):
        validate_payload(Action.TAG_ADDED, {})


def test_payload_wrong_type_rejected():
    with pytest.raises(MalformedPayload):
        validate_payload(Action.TAG_ADDED, {"tag": 7})


def test_bool_does_not_pass_as_int():
    # bool is an int subclass; the vote payload must still reject it
    with pytest.raises(MalformedPayload):
        validate_payload(
            Action.VOTE_CAST, {"user_id": "u-1", "definition_id": "d-1", "value": True}
        )


def test_from_jsonl_rejects_garbage():
    with pytest.raises(MalformedPayload):
        from_jsonl("not json\n")
    with pytest.raises(MalformedPayload):
        from_jsonl('{"seq": 1}\n')


# -- replay --------------------------------------------------------------


def test_replay_builds_expected_state():
    state = replay(_history())
    assert state.term.label == "widget"
    assert state.term.tags == frozenset({"tools"})
    assert set(state.definitions) == {"d-1", "d-2"}
    assert state.ai_definition().id == "d-2"
    assert state.negotiation.phase is Phase.AI_PROPOSED
    assert state.tally_for("d-2").score == 1
    assert state.negotiation.last_activity == NOW + timedelta(minutes=5)


def test_replay_is_deterministic():
    events = _history()
    assert canonical_state(replay(events)) == canonical_state(replay(events))


def test_replay_requires_creation_first():
    with pytest.raises(CorruptHistory):
        replay(_history()[1:])


def test_replay_rejects_empty_history():
    with pytest.raises(CorruptHistory):
        replay([])


def test_replay_rejects_second_creation():
    events = _history()
    dup = events[0].with_seq(9)
    with pytest.raises(CorruptHistory):
        replay(events + [dup])


def test_replay_rejects_second_ai_definition():
    events = _history()
    events.append(
        _ev(
            Action.DEFINITION_ADDED,
            {
                "definition_id": "d-3",
                "body": "another draft",
                "kind": "ai",
                "author": AI.to_dict(),
            },
            seq=6,
            actor=AI,
        )
    )
    with pytest.raises(CorruptHistory):
        replay(events)


def test_replay_rejects_version_gap():
    events = _history()
    events.append(
        _ev(
            Action.DEFINITION_REVISED,
            {
                "definition_id": "d-2",
                "prior_body": "machine draft",
                "new_body": "v3",
                "version": 3,  # skips 2
            },
            seq=6,
            actor=AI,
        )
    )
    with pytest.raises(CorruptHistory):
        replay(events)


def test_replay_rejects_prior_body_mismatch():
    events = _history()
    events.append(
        _ev(
            Action.DEFINITION_REVISED,
            {
                "definition_id": "d-2",
                "prior_body": "something else",
                "new_body": "v2",
                "version": 2,
            },
            seq=6,
            actor=AI,
        )
    )
    with pytest.raises(CorruptHistory):
        replay(events)


def test_replay_rejects_dangling_references():
    events = _history()
    events.append(
        _ev(
            Action.COMMENT_ADDED,
            {
                "comment_id": "c-1",
                "definition_id": "d-404",
                "body": "?",
                "disposition": "discussion",
            },
            seq=6,
        )
    )
    with pytest.raises(CorruptHistory):
        replay(events)


def test_replay_rejects_nonmonotonic_seq():
    events = _history()
    events[3] = events[3].with_seq(2)
    with pytest.raises(CorruptHistory):
        replay(events)


def test_replay_rejects_foreign_term_event():
    events = _history()
    foreign = ProvenanceEvent(
        term_id="t-2",
        actor=HUMAN,
        action=Action.TAG_ADDED,
        payload={"tag": "x"},
        occurred_at=NOW,
        seq=6,
    )
    with pytest.raises(CorruptHistory):
        replay(events + [foreign])


def test_fold_continues_from_existing_state():
    events = _history()
    state = fold(events[:2])
    state = fold(events[2:], state)
    assert canonical_state(state) == canonical_state(replay(events))


def test_revision_applies_cleanly():
    events = _history()
    events.append(
        _ev(
            Action.DEFINITION_REVISED,
            {
                "definition_id": "d-2",
                "prior_body": "machine draft",
                "new_body": "machine draft, refined",
                "version": 2,
            },
            seq=6,
            actor=AI,
        )
    )
    state = replay(events)
    assert state.definitions["d-2"].body == "machine draft, refined"
    assert state.definitions["d-2"].version == 2


# -- timeline ------------------------------------------------------------


def test_timeline_orders_are_mirrors():
    events = _history()
    oldest = render_timeline(events, TimelineOrder.OLDEST_FIRST)
    newest = render_timeline(events, TimelineOrder.NEWEST_FIRST)
    assert newest == list(reversed(oldest))
    assert [e.seq for e in oldest] == [1, 2, 3, 4, 5]


def test_timeline_actor_kind_tracks_event_actor():
    events = _history()
    by_seq = {e.seq: e for e in events}
    for entry in render_timeline(events, TimelineOrder.OLDEST_FIRST):
        assert entry.actor_kind is by_seq[entry.seq].actor.kind


def test_timeline_summaries_follow_templates():
    entries = render_timeline(_history(), TimelineOrder.OLDEST_FIRST)
    assert entries[0].summary == "u-1 created the term"
    assert entries[1].summary == "u-1 added a definition"
    assert entries[3].summary == "AI added a definition"
    assert entries[4].summary == "u-1 voted up on a definition"


def test_timeline_excerpt_truncates():
    long_body = "word " * 40
    event = _ev(Action.EXAMPLE_ADDED, {"example_id": "x-9", "body": long_body}, seq=1)
    entry = entry_for(event)
    assert len(entry.payload_excerpt) == EXCERPT_LIMIT
    assert entry.payload_excerpt.endswith("...")


def test_timeline_entry_to_dict_shape():
    entry = entry_for(_history()[0])
    assert entry.to_dict() == {
        "seq": 1,
        "occurred_at": "2025-06-02T09:01:00+00:00",
        "actor_kind": "human",
        "action": "term_created",
        "summary": "u-1 created the term",
        "payload_excerpt": "widget",
    }
