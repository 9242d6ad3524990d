"""Engine operations end to end against the in-memory store: rules,
provenance written per action, and the negotiation loop."""

from datetime import timedelta

import pytest

from lexhive.core.errors import (
    AiDefinitionExists,
    BackendUnavailable,
    DuplicateLabel,
    EmptyBody,
    EmptyLabel,
    EmptyTag,
    InvalidValue,
    NoAIDefinition,
    NoExample,
    NoPendingFeedback,
    NotAuthorized,
    UnknownDefinition,
)
from lexhive.core.models import (
    ActorKind,
    ActorRef,
    CommentDisposition,
    DefinitionKind,
    Phase,
)
from lexhive.provenance.events import Action
from lexhive.refine.backends import MockBackend, Outcome
from lexhive.refine.prompt import TEMPLATE_VERSION
from lexhive.service import VocabService


def _actions(service, term_id):
    return [e.action for e in service.get_term(term_id).events]


# -- users ---------------------------------------------------------------


def test_ensure_user_is_idempotent(service):
    first = service.ensure_user("sub-1", "Alice")
    second = service.ensure_user("sub-1", "Alice")
    assert first == second


def test_ensure_user_refreshes_display_name(service):
    user = service.ensure_user("sub-1", "Alice")
    renamed = service.ensure_user("sub-1", "Alicia")
    assert renamed.id == user.id
    assert renamed.display_name == "Alicia"


# -- create_term / tags --------------------------------------------------


def test_create_term_records_provenance(service, alice):
    mutation = service.create_term(alice.actor, " Grain Boundary ", ["Materials", "materials"])
    state = mutation.state
    assert state.term.label == "Grain Boundary"
    assert state.term.tags == frozenset({"materials"})  # folded and deduped
    assert mutation.provenance_seq == 1
    assert _actions(service, mutation.subject_id) == [Action.TERM_CREATED]


def test_create_term_rejects_blank_label(service, alice):
    with pytest.raises(EmptyLabel):
        service.create_term(alice.actor, "   ")


def test_create_term_rejects_blank_tag(service, alice):
    with pytest.raises(EmptyTag):
        service.create_term(alice.actor, "widget", ["  "])


def test_duplicate_label_is_folded(service, alice):
    service.create_term(alice.actor, "Widget")
    with pytest.raises(DuplicateLabel):
        service.create_term(alice.actor, "  widget ")


def test_add_tag_twice_is_a_no_op(service, alice):
    term_id = service.create_term(alice.actor, "widget").subject_id
    first = service.add_tag(alice.actor, term_id, "Tools")
    again = service.add_tag(alice.actor, term_id, "tools")
    assert first.commit is not None
    assert again.commit is None  # nothing written
    assert again.provenance_seq is None
    assert _actions(service, term_id) == [Action.TERM_CREATED, Action.TAG_ADDED]


# -- definitions ---------------------------------------------------------


def test_add_definition(service, alice):
    term_id = service.create_term(alice.actor, "widget").subject_id
    mutation = service.add_definition(alice.actor, term_id, "  a small part ")
    definition = mutation.state.definitions[mutation.subject_id]
    assert definition.body == "a small part"
    assert definition.kind is DefinitionKind.HUMAN
    assert definition.version == 1


def test_add_definition_rejects_empty(service, alice):
    term_id = service.create_term(alice.actor, "widget").subject_id
    with pytest.raises(EmptyBody):
        service.add_definition(alice.actor, term_id, "   ")


def test_human_cannot_claim_ai_kind(service, alice):
    term_id = service.create_term(alice.actor, "widget").subject_id
    with pytest.raises(NotAuthorized):
        service.add_definition(alice.actor, term_id, "body", kind=DefinitionKind.AI)


def test_many_human_definitions_allowed(service, alice, bob):
    term_id = service.create_term(alice.actor, "widget").subject_id
    service.add_definition(alice.actor, term_id, "first")
    mutation = service.add_definition(bob.actor, term_id, "second")
    assert len(mutation.state.human_definitions()) == 2


def test_second_ai_definition_refused(service, make_term, alice):
    term_id = make_term("widget")
    service.generate_ai_definition(alice.actor, term_id)
    ai_actor = ActorRef(kind=ActorKind.AI, id="mock")
    with pytest.raises(AiDefinitionExists):
        service.add_definition(ai_actor, term_id, "another draft", kind=DefinitionKind.AI)
    with pytest.raises(AiDefinitionExists):
        service.generate_ai_definition(alice.actor, term_id)


# -- revise_definition ---------------------------------------------------


def test_author_revises_own_definition(service, alice):
    term_id = service.create_term(alice.actor, "widget").subject_id
    d_id = service.add_definition(alice.actor, term_id, "v1").subject_id
    mutation = service.revise_definition(alice.actor, d_id, "v2")
    revised = mutation.state.definitions[d_id]
    assert (revised.body, revised.version) == ("v2", 2)
    event = service.get_term(term_id).events[-1]
    assert event.action is Action.DEFINITION_REVISED
    assert event.payload["prior_body"] == "v1"  # history keeps the old text


def test_revision_authorization_matrix(service, make_term, alice, bob):
    term_id = make_term("widget")
    human_def = service.get_term(term_id).state.human_definitions()[0].id
    ai_def = service.generate_ai_definition(alice.actor, term_id).definition_id
    ai_actor = ActorRef(kind=ActorKind.AI, id="mock")

    with pytest.raises(NotAuthorized):
        service.revise_definition(bob.actor, human_def, "not mine")
    with pytest.raises(NotAuthorized):
        service.revise_definition(alice.actor, ai_def, "humans cannot edit the draft")
    with pytest.raises(NotAuthorized):
        service.revise_definition(ai_actor, human_def, "ai cannot edit human text")
    assert service.revise_definition(ai_actor, ai_def, "draft v2").subject_id == ai_def


def test_revise_unknown_or_empty(service, alice):
    with pytest.raises(UnknownDefinition):
        service.revise_definition(alice.actor, "d-404", "body")
    term_id = service.create_term(alice.actor, "widget").subject_id
    d_id = service.add_definition(alice.actor, term_id, "v1").subject_id
    with pytest.raises(EmptyBody):
        service.revise_definition(alice.actor, d_id, "   ")


# -- comments and feedback -----------------------------------------------


def test_discussion_comment_never_touches_negotiation(service, make_term, alice, bob):
    term_id = make_term("widget")
    d_id = service.get_term(term_id).state.human_definitions()[0].id
    mutation = service.add_comment(bob.actor, d_id, "nice one")
    assert mutation.state.negotiation.phase is Phase.NO_AI_DEFINITION
    assert mutation.state.negotiation.pending_feedback == ()


def test_feedback_on_ai_definition_queues(service, make_term, alice, bob):
    term_id = make_term("widget")
    ai_id = service.generate_ai_definition(alice.actor, term_id).definition_id
    mutation = service.add_comment(
        bob.actor, ai_id, "cite a source", CommentDisposition.FEEDBACK
    )
    negotiation = mutation.state.negotiation
    assert negotiation.phase is Phase.FEEDBACK_PENDING
    assert negotiation.pending_feedback == (mutation.subject_id,)
    last = service.get_term(term_id).events[-1]
    assert last.action is Action.NEGOTIATION_STATE_CHANGED
    assert last.payload["reason"] == "feedback_received"


def test_feedback_on_human_definition_is_just_a_comment(service, make_term, alice, bob):
    term_id = make_term("widget")
    d_id = service.get_term(term_id).state.human_definitions()[0].id
    mutation = service.add_comment(
        bob.actor, d_id, "sharpen this", CommentDisposition.FEEDBACK
    )
    state = mutation.state
    assert state.comments_for(d_id)[0].disposition is CommentDisposition.FEEDBACK
    assert state.negotiation.pending_feedback == ()  # recorded, never queued
    assert _actions(service, term_id)[-1] is Action.COMMENT_ADDED


def test_comment_validation(service, make_term, alice):
    term_id = make_term("widget")
    d_id = service.get_term(term_id).state.human_definitions()[0].id
    with pytest.raises(EmptyBody):
        service.add_comment(alice.actor, d_id, "  ")
    with pytest.raises(UnknownDefinition):
        service.add_comment(alice.actor, "d-404", "hello")


def test_submit_feedback_targets_the_ai_definition(service, make_term, alice, bob):
    term_id = make_term("widget")
    with pytest.raises(NoAIDefinition):
        service.submit_feedback(bob.actor, term_id, "too vague")
    ai_id = service.generate_ai_definition(alice.actor, term_id).definition_id
    mutation = service.submit_feedback(bob.actor, term_id, "too vague")
    assert mutation.state.comments_for(ai_id)[0].body == "too vague"
    assert mutation.state.negotiation.phase is Phase.FEEDBACK_PENDING


def test_feedback_reopens_converged_term(service, make_term, alice, bob, cara):
    term_id = make_term("widget")
    service.generate_ai_definition(alice.actor, term_id)
    ai_id = service.get_term(term_id).state.ai_definition().id
    service.cast_vote(alice.user, ai_id, 1)
    service.cast_vote(bob.user, ai_id, 1)
    assert (
        service.evaluate_convergence(term_id).state.negotiation.phase is Phase.CONVERGED
    )
    mutation = service.submit_feedback(cara.actor, term_id, "actually, refine this")
    assert mutation.state.negotiation.phase is Phase.FEEDBACK_PENDING


# -- votes ---------------------------------------------------------------


def test_vote_upsert_replaces(service, make_term, alice, bob):
    term_id = make_term("widget")
    d_id = service.get_term(term_id).state.human_definitions()[0].id
    service.cast_vote(alice.user, d_id, 1)
    service.cast_vote(bob.user, d_id, 1)
    state = service.cast_vote(alice.user, d_id, -1).state  # alice flips
    assert state.tally_for(d_id).to_dict() == {"up": 1, "down": 1, "score": 0}
    assert len(state.votes[d_id]) == 2  # one row per user


def test_vote_validation(service, make_term, alice):
    term_id = make_term("widget")
    d_id = service.get_term(term_id).state.human_definitions()[0].id
    with pytest.raises(InvalidValue):
        service.cast_vote(alice.user, d_id, 0)
    with pytest.raises(UnknownDefinition):
        service.cast_vote(alice.user, "d-404", 1)


# -- generation ----------------------------------------------------------


def test_generation_needs_an_example(service, alice):
    term_id = service.create_term(alice.actor, "widget").subject_id
    service.add_definition(alice.actor, term_id, "a part")
    with pytest.raises(NoExample):
        service.generate_ai_definition(alice.actor, term_id)


def test_generation_success_writes_three_events(service, make_term, alice):
    term_id = make_term("widget")
    outcome = service.generate_ai_definition(alice.actor, term_id)
    assert outcome.result.outcome is Outcome.SUCCESS
    assert outcome.definition_id is not None
    tail = service.get_term(term_id).events[-3:]
    assert [e.action for e in tail] == [
        Action.AI_GENERATION_REQUESTED,
        Action.AI_GENERATION_SUCCEEDED,
        Action.DEFINITION_ADDED,
    ]
    requested = tail[0]
    assert requested.actor == alice.actor  # the human triggered it
    assert requested.payload["template_version"] == TEMPLATE_VERSION
    assert requested.payload["feedback_ids"] == []
    assert tail[2].actor.kind is ActorKind.AI
    state = service.get_term(term_id).state
    assert state.negotiation.phase is Phase.AI_PROPOSED


def test_generation_failure_is_recorded_not_raised(store, clock, ids):
    backend = MockBackend(fail_labels=["widget"])
    service = VocabService(store, backend, clock=clock, ids=ids, sleep=lambda _: None)
    user = service.ensure_user("sub-1", "Alice")
    actor = ActorRef(kind=ActorKind.HUMAN, id=user.id)
    term_id = service.create_term(actor, "widget").subject_id
    service.add_definition(actor, term_id, "a part")
    service.add_example(actor, term_id, "use the widget")

    outcome = service.generate_ai_definition(actor, term_id)
    assert outcome.result.outcome is Outcome.FAILURE
    assert outcome.definition_id is None
    tail = [e.action for e in service.get_term(term_id).events[-2:]]
    assert tail == [Action.AI_GENERATION_REQUESTED, Action.AI_GENERATION_FAILED]
    state = service.get_term(term_id).state
    assert state.ai_definition() is None
    assert state.negotiation.phase is Phase.NO_AI_DEFINITION
    # a failed attempt does not burn the single AI slot
    service.generate_ai_definition(actor, term_id)


class DownBackend:
    id = "down"

    def __init__(self):
        self.calls = 0

    def generate(self, prompt, params=None):
        self.calls += 1
        raise BackendUnavailable("no route to model")


def test_transport_outage_leaves_no_events(store, clock, ids):
    backend = DownBackend()
    service = VocabService(store, backend, clock=clock, ids=ids, sleep=lambda _: None)
    user = service.ensure_user("sub-1", "Alice")
    actor = ActorRef(kind=ActorKind.HUMAN, id=user.id)
    term_id = service.create_term(actor, "widget").subject_id
    service.add_definition(actor, term_id, "a part")
    service.add_example(actor, term_id, "use the widget")
    before = len(service.get_term(term_id).events)

    with pytest.raises(BackendUnavailable):
        service.generate_ai_definition(actor, term_id)
    assert backend.calls == 3  # retried, then surfaced
    assert len(service.get_term(term_id).events) == before


# -- refinement ----------------------------------------------------------


def _queued_term(service, make_term, alice, bob) -> tuple[str, str, str]:
    term_id = make_term("widget")
    ai_id = service.generate_ai_definition(alice.actor, term_id).definition_id
    comment_id = service.add_comment(
        bob.actor, ai_id, "mention the unit", CommentDisposition.FEEDBACK
    ).subject_id
    return term_id, ai_id, comment_id


def test_refine_requires_ai_definition_and_feedback(service, make_term, alice, bob):
    term_id = make_term("widget")
    with pytest.raises(NoAIDefinition):
        service.refine_ai_definition(bob.actor, term_id)
    service.generate_ai_definition(alice.actor, term_id)
    with pytest.raises(NoPendingFeedback):
        service.refine_ai_definition(bob.actor, term_id)


def test_refine_consumes_queue_and_bumps_version(service, make_term, alice, bob):
    term_id, ai_id, comment_id = _queued_term(service, make_term, alice, bob)
    outcome = service.refine_ai_definition(bob.actor, term_id)
    assert outcome.result.outcome is Outcome.SUCCESS
    state = outcome.mutation.state
    assert state.definitions[ai_id].version == 2
    assert state.negotiation.phase is Phase.AI_PROPOSED
    assert state.negotiation.pending_feedback == ()
    requested = next(
        e
        for e in service.get_term(term_id).events
        if e.action is Action.AI_GENERATION_REQUESTED and e.payload["feedback_ids"]
    )
    assert requested.payload["feedback_ids"] == [comment_id]
    assert "mention the unit" in requested.payload["prompt"]


def test_refined_draft_differs_from_original(service, make_term, alice, bob):
    term_id, ai_id, _ = _queued_term(service, make_term, alice, bob)
    before = service.get_term(term_id).state.definitions[ai_id].body
    service.refine_ai_definition(bob.actor, term_id)
    after = service.get_term(term_id).state.definitions[ai_id].body
    assert before != after


def test_feedback_arriving_mid_refinement_stays_queued(
    service, make_term, alice, bob, cara
):
    """Refinement consumes only the feedback it saw; a comment landing while
    the backend runs must survive in the queue."""
    term_id, ai_id, first_comment = _queued_term(service, make_term, alice, bob)
    inner = MockBackend()
    late: dict = {}

    class Interleaver:
        id = "mock"

        def generate(self, prompt, params=None):
            if not late:
                late["id"] = service.add_comment(
                    cara.actor, ai_id, "late feedback", CommentDisposition.FEEDBACK
                ).subject_id
            return inner.generate(prompt, params)

    service._backend = Interleaver()
    outcome = service.refine_ai_definition(bob.actor, term_id)
    negotiation = outcome.mutation.state.negotiation
    assert negotiation.phase is Phase.FEEDBACK_PENDING
    assert negotiation.pending_feedback == (late["id"],)


def test_failed_refinement_keeps_queue(store, clock, ids):
    service = VocabService(
        store, MockBackend(fail_labels=[]), clock=clock, ids=ids, sleep=lambda _: None
    )
    user = service.ensure_user("sub-1", "Alice")
    actor = ActorRef(kind=ActorKind.HUMAN, id=user.id)
    term_id = service.create_term(actor, "widget").subject_id
    service.add_definition(actor, term_id, "a part")
    service.add_example(actor, term_id, "use the widget")
    ai_id = service.generate_ai_definition(actor, term_id).definition_id
    comment_id = service.add_comment(
        actor, ai_id, "fix it", CommentDisposition.FEEDBACK
    ).subject_id

    service._backend = MockBackend(fail_labels=["widget"])  # refine now fails
    outcome = service.refine_ai_definition(actor, term_id)
    assert outcome.result.outcome is Outcome.FAILURE
    state = service.get_term(term_id).state
    assert state.negotiation.phase is Phase.FEEDBACK_PENDING
    assert state.negotiation.pending_feedback == (comment_id,)
    assert state.definitions[ai_id].version == 1  # draft untouched


# -- convergence ---------------------------------------------------------


def test_convergence_requires_ai_definition(service, make_term):
    term_id = make_term("widget")
    with pytest.raises(NoAIDefinition):
        service.evaluate_convergence(term_id)


def test_convergence_at_threshold_writes_system_event(service, make_term, alice, bob):
    term_id = make_term("widget")
    ai_id = service.generate_ai_definition(alice.actor, term_id).definition_id
    service.cast_vote(alice.user, ai_id, 1)
    service.cast_vote(bob.user, ai_id, 1)
    mutation = service.evaluate_convergence(term_id)
    assert mutation.state.negotiation.phase is Phase.CONVERGED
    event = service.get_term(term_id).events[-1]
    assert event.payload["reason"] == "converged"
    assert event.actor.id == "system"


def test_below_threshold_is_a_no_op(service, make_term, alice):
    term_id = make_term("widget")
    ai_id = service.generate_ai_definition(alice.actor, term_id).definition_id
    service.cast_vote(alice.user, ai_id, 1)  # score 1 < 2
    mutation = service.evaluate_convergence(term_id)
    assert mutation.commit is None
    assert mutation.state.negotiation.phase is Phase.AI_PROPOSED


def test_stall_after_idle_window(service, make_term, alice, clock):
    term_id = make_term("widget")
    service.generate_ai_definition(alice.actor, term_id)
    clock.advance(timedelta(days=15))
    mutation = service.evaluate_convergence(term_id)
    assert mutation.state.negotiation.phase is Phase.STALLED
    assert service.get_term(term_id).events[-1].payload["reason"] == "stalled"


def test_pending_feedback_blocks_convergence(service, make_term, alice, bob, cara):
    term_id = make_term("widget")
    ai_id = service.generate_ai_definition(alice.actor, term_id).definition_id
    service.cast_vote(alice.user, ai_id, 1)
    service.cast_vote(bob.user, ai_id, 1)
    service.add_comment(cara.actor, ai_id, "wait", CommentDisposition.FEEDBACK)
    mutation = service.evaluate_convergence(term_id)
    assert mutation.commit is None
    assert mutation.state.negotiation.phase is Phase.FEEDBACK_PENDING


# -- audit stays green ---------------------------------------------------


def test_full_loop_keeps_projection_and_log_in_step(service, make_term, alice, bob):
    term_id, ai_id, _ = _queued_term(service, make_term, alice, bob)
    service.refine_ai_definition(bob.actor, term_id)
    service.cast_vote(alice.user, ai_id, 1)
    service.cast_vote(bob.user, ai_id, 1)
    service.evaluate_convergence(term_id)
    report = service.store.audit()
    assert report.ok, report.mismatches
