"""Application engine: every operation is one atomic commit.

Each mutation builds provenance events, folds them onto the loaded state
with the same ``apply_event`` replay uses, and commits projection plus
events together. A losing version check triggers reload-and-reapply, so
preconditions are always re-evaluated against fresh state. Backends are
called at most once per operation, outside the retry loop.
"""

from __future__ import annotations

import threading
import time
from collections import defaultdict
from dataclasses import dataclass, replace
from datetime import datetime, timedelta
from typing import Callable, Sequence

from lexhive.clock import Clock, SystemClock
from lexhive.core.errors import (
    AiDefinitionExists,
    ConflictRetry,
    DuplicateLabel,
    EmptyBody,
    EmptyLabel,
    EmptyTag,
    InvalidValue,
    NoAIDefinition,
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
    SYSTEM_ACTOR,
    TermState,
    User,
    UserRole,
    fold_tag,
)
from lexhive.ids import IdFactory, RandomIdFactory
from lexhive.provenance.events import Action, ProvenanceEvent
from lexhive.provenance.replay import fold
from lexhive.provenance.timeline import TimelineEntry, TimelineOrder, render_timeline
from lexhive.refine.backends import (
    GenerationBackend,
    GenerationParams,
    GenerationResult,
    Outcome,
    call_with_retries,
)
from lexhive.refine.negotiation import (
    DEFAULT_ACCEPTANCE_THRESHOLD,
    DEFAULT_STALL_WINDOW,
    evaluate_phase,
    phase_after_feedback,
)
from lexhive.refine.prompt import TEMPLATE_VERSION, build_prompt
from lexhive.store import CommitResult, SqliteStore, TermAggregate


@dataclass(frozen=True)
class Mutation:
    """Result of one engine operation.

    ``commit`` is None for idempotent no-ops (nothing was written);
    ``subject_id`` is the id of whatever entity the operation created.
    """

    state: TermState
    commit: CommitResult | None
    subject_id: str | None = None

    @property
    def provenance_seq(self) -> int | None:
        return self.commit.last_seq if self.commit else None


@dataclass(frozen=True)
class GenerationOutcome:
    """A generation or refinement attempt plus its committed effects."""

    generation_id: str
    result: GenerationResult
    mutation: Mutation

    @property
    def definition_id(self) -> str | None:
        return self.mutation.subject_id


class VocabService:
    """Coordinates vocabulary operations over one store and one backend."""

    def __init__(
        self,
        store: SqliteStore,
        backend: GenerationBackend,
        *,
        clock: Clock | None = None,
        ids: IdFactory | None = None,
        acceptance_threshold: int = DEFAULT_ACCEPTANCE_THRESHOLD,
        stall_window: timedelta = DEFAULT_STALL_WINDOW,
        backend_attempts: int = 3,
        commit_attempts: int = 5,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self._store = store
        self._backend = backend
        self._clock = clock or SystemClock()
        self._ids = ids or RandomIdFactory()
        self.acceptance_threshold = acceptance_threshold
        self.stall_window = stall_window
        self._backend_attempts = backend_attempts
        self._commit_attempts = commit_attempts
        self._sleep = sleep
        self._generation_locks: defaultdict[str, threading.Lock] = defaultdict(threading.Lock)

    @property
    def store(self) -> SqliteStore:
        return self._store

    @property
    def clock(self) -> Clock:
        return self._clock

    @property
    def backend_id(self) -> str:
        return self._backend.id

    def _now(self) -> datetime:
        return self._clock.now()

    def _ai_actor(self) -> ActorRef:
        return ActorRef(kind=ActorKind.AI, id=self._backend.id)

    # -- users -----------------------------------------------------------

    def ensure_user(
        self, subject: str, display_name: str, role: UserRole = UserRole.MEMBER
    ) -> User:
        """Find or create the account for an authenticated identity."""
        found = self._store.find_user_by_subject(subject)
        if found is not None:
            if found.display_name != display_name:
                found = replace(found, display_name=display_name)
                self._store.save_user(found)
            return found
        user = User(
            id=self._ids.new_id("u"),
            display_name=display_name,
            identity_subject=subject,
            role=role,
        )
        self._store.save_user(user)
        return user

    def get_user(self, user_id: str) -> User:
        return self._store.get_user(user_id)

    # -- reads -----------------------------------------------------------

    def get_term(self, term_id: str) -> TermAggregate:
        return self._store.load_aggregate(term_id)

    def timeline(
        self, term_id: str, order: TimelineOrder = TimelineOrder.NEWEST_FIRST
    ) -> list[TimelineEntry]:
        aggregate = self._store.load_aggregate(term_id)
        return render_timeline(aggregate.events, order)

    # -- mutation plumbing ----------------------------------------------

    def _mutate(
        self,
        term_id: str,
        build: Callable[[TermState], tuple[list[ProvenanceEvent], str | None]],
    ) -> Mutation:
        """Load, build events, fold, commit; retried on version conflicts.

        ``build`` sees freshly loaded state on every attempt, so its
        precondition checks hold at commit time or the operation fails.
        """
        last: ConflictRetry | None = None
        for _ in range(self._commit_attempts):
            aggregate = self._store.load_aggregate(term_id)
            events, subject_id = build(aggregate.state)
            if not events:
                return Mutation(state=aggregate.state, commit=None, subject_id=subject_id)
            state = fold(events, aggregate.state)
            try:
                commit = self._store.commit(state, events, expected_version=aggregate.version)
            except ConflictRetry as exc:
                last = exc
                continue
            return Mutation(state=state, commit=commit, subject_id=subject_id)
        assert last is not None
        raise last

    def _event(
        self, term_id: str, actor: ActorRef, action: Action, payload: dict
    ) -> ProvenanceEvent:
        return ProvenanceEvent(
            term_id=term_id,
            actor=actor,
            action=action,
            payload=payload,
            occurred_at=self._now(),
        )

    # -- vocabulary operations ------------------------------------------

    def create_term(
        self, actor: ActorRef, label: str, tags: Sequence[str] = ()
    ) -> Mutation:
        label = label.strip()
        if not label:
            raise EmptyLabel()
        folded_tags = []
        for tag in tags:
            folded = fold_tag(tag)
            if not folded:
                raise EmptyTag()
            if folded not in folded_tags:
                folded_tags.append(folded)
        if self._store.find_term_id(label) is not None:
            raise DuplicateLabel(f"an active term with label {label!r} already exists")
        term_id = self._ids.new_id("t")
        event = self._event(
            term_id,
            actor,
            Action.TERM_CREATED,
            {
                "label": label,
                "tags": sorted(folded_tags),
                "created_by": actor.to_dict(),
            },
        )
        state = fold([event])
        commit = self._store.commit(state, [event], expected_version=0)
        return Mutation(state=state, commit=commit, subject_id=term_id)

    def add_tag(self, actor: ActorRef, term_id: str, tag: str) -> Mutation:
        folded = fold_tag(tag)
        if not folded:
            raise EmptyTag()

        def build(state: TermState) -> tuple[list[ProvenanceEvent], str | None]:
            if folded in state.term.tags:
                return [], None  # idempotent: tagging twice writes nothing
            return [self._event(term_id, actor, Action.TAG_ADDED, {"tag": folded})], None

        return self._mutate(term_id, build)

    def add_definition(
        self,
        actor: ActorRef,
        term_id: str,
        body: str,
        kind: DefinitionKind | None = None,
    ) -> Mutation:
        body = body.strip()
        if not body:
            raise EmptyBody()
        kind = kind or DefinitionKind(actor.kind.value)
        if kind.value != actor.kind.value:
            raise NotAuthorized(
                f"a {actor.kind.value} author cannot add a {kind.value} definition"
            )
        definition_id = self._ids.new_id("d")

        def build(state: TermState) -> tuple[list[ProvenanceEvent], str | None]:
            if kind is DefinitionKind.AI and state.ai_definition() is not None:
                raise AiDefinitionExists(
                    f"term {term_id} already has its AI definition"
                )
            event = self._event(
                term_id,
                actor,
                Action.DEFINITION_ADDED,
                {
                    "definition_id": definition_id,
                    "body": body,
                    "kind": kind.value,
                    "author": actor.to_dict(),
                },
            )
            return [event], definition_id

        return self._mutate(term_id, build)

    def revise_definition(
        self, actor: ActorRef, definition_id: str, new_body: str
    ) -> Mutation:
        """Replace a definition body, bumping its version.

        Humans may revise only human definitions they authored; the AI
        definition is revised solely through the refinement loop, so a
        human aiming at it gets NotAuthorized rather than a silent edit.
        """
        new_body = new_body.strip()
        if not new_body:
            raise EmptyBody()
        term_id = self._store.find_term_for_definition(definition_id)
        if term_id is None:
            raise UnknownDefinition(f"no definition with id {definition_id!r}")

        def build(state: TermState) -> tuple[list[ProvenanceEvent], str | None]:
            definition = state.definitions.get(definition_id)
            if definition is None:
                raise UnknownDefinition(f"no definition with id {definition_id!r}")
            if actor.kind is ActorKind.HUMAN:
                if definition.kind is DefinitionKind.AI:
                    raise NotAuthorized("the AI definition is revised via refinement")
                if definition.author.id != actor.id:
                    raise NotAuthorized(
                        f"definition {definition_id} belongs to another author"
                    )
            elif definition.kind is not DefinitionKind.AI:
                raise NotAuthorized("the AI actor may revise only the AI definition")
            event = self._event(
                term_id,
                actor,
                Action.DEFINITION_REVISED,
                {
                    "definition_id": definition_id,
                    "prior_body": definition.body,
                    "new_body": new_body,
                    "version": definition.version + 1,
                },
            )
            return [event], definition_id

        return self._mutate(term_id, build)

    def add_example(self, actor: ActorRef, term_id: str, body: str) -> Mutation:
        body = body.strip()
        if not body:
            raise EmptyBody()
        example_id = self._ids.new_id("x")

        def build(state: TermState) -> tuple[list[ProvenanceEvent], str | None]:
            event = self._event(
                term_id,
                actor,
                Action.EXAMPLE_ADDED,
                {"example_id": example_id, "body": body},
            )
            return [event], example_id

        return self._mutate(term_id, build)

    def add_comment(
        self,
        actor: ActorRef,
        definition_id: str,
        body: str,
        disposition: CommentDisposition = CommentDisposition.DISCUSSION,
    ) -> Mutation:
        """Comment on a definition; feedback on the AI draft queues refinement.

        The queue exists to drive the next revision of the single machine
        draft, so feedback aimed at a human definition is recorded as an
        ordinary comment without touching the negotiation.
        """
        body = body.strip()
        if not body:
            raise EmptyBody()
        term_id = self._store.find_term_for_definition(definition_id)
        if term_id is None:
            raise UnknownDefinition(f"no definition with id {definition_id!r}")
        comment_id = self._ids.new_id("c")

        def build(state: TermState) -> tuple[list[ProvenanceEvent], str | None]:
            definition = state.definitions.get(definition_id)
            if definition is None:
                raise UnknownDefinition(f"no definition with id {definition_id!r}")
            events = [
                self._event(
                    term_id,
                    actor,
                    Action.COMMENT_ADDED,
                    {
                        "comment_id": comment_id,
                        "definition_id": definition_id,
                        "body": body,
                        "disposition": disposition.value,
                    },
                )
            ]
            if (
                disposition is CommentDisposition.FEEDBACK
                and definition.kind is DefinitionKind.AI
            ):
                phase = phase_after_feedback(state.negotiation.phase)
                events.append(
                    self._event(
                        term_id,
                        actor,
                        Action.NEGOTIATION_STATE_CHANGED,
                        {
                            "phase": phase.value,
                            "pending_feedback": [
                                *state.negotiation.pending_feedback,
                                comment_id,
                            ],
                            "reason": "feedback_received",
                        },
                    )
                )
            return events, comment_id

        return self._mutate(term_id, build)

    def submit_feedback(self, actor: ActorRef, term_id: str, body: str) -> Mutation:
        """Queue feedback against the term's AI definition."""
        aggregate = self._store.load_aggregate(term_id)
        ai_definition = aggregate.state.ai_definition()
        if ai_definition is None:
            raise NoAIDefinition(f"term {term_id} has no AI definition")
        return self.add_comment(
            actor, ai_definition.id, body, CommentDisposition.FEEDBACK
        )

    def cast_vote(self, user: User, definition_id: str, value: int) -> Mutation:
        term_id = self._store.find_term_for_definition(definition_id)
        if term_id is None:
            raise UnknownDefinition(f"no definition with id {definition_id!r}")
        if value not in (1, -1):
            raise InvalidValue(f"vote value must be +1 or -1, got {value}")
        registered = self._store.get_user(user.id)  # raises UnknownUser

        def build(state: TermState) -> tuple[list[ProvenanceEvent], str | None]:
            if definition_id not in state.definitions:
                raise UnknownDefinition(f"no definition with id {definition_id!r}")
            event = self._event(
                term_id,
                ActorRef(kind=ActorKind.HUMAN, id=registered.id),
                Action.VOTE_CAST,
                {"user_id": registered.id, "definition_id": definition_id, "value": value},
            )
            return [event], definition_id

        return self._mutate(term_id, build)

    # -- AI refinement ---------------------------------------------------

    def generate_ai_definition(
        self,
        actor: ActorRef,
        term_id: str,
        params: GenerationParams | None = None,
    ) -> GenerationOutcome:
        """First machine draft for a term; example-initiated, one per term."""
        with self._generation_locks[term_id]:
            aggregate = self._store.load_aggregate(term_id)
            state = aggregate.state
            if state.ai_definition() is not None:
                raise AiDefinitionExists(f"term {term_id} already has its AI definition")
            prompt = build_prompt(
                state.term.label,
                [d.body for d in state.human_definitions()],
                [e.body for e in state.examples],
            )
            generation_id = self._ids.new_id("g")
            result = call_with_retries(
                self._backend,
                prompt.rendered,
                params=params,
                attempts=self._backend_attempts,
                sleep=self._sleep,
            )
            definition_id = (
                self._ids.new_id("d") if result.outcome is Outcome.SUCCESS else None
            )

            def build(state: TermState) -> tuple[list[ProvenanceEvent], str | None]:
                if state.ai_definition() is not None:
                    raise AiDefinitionExists(
                        f"term {term_id} already has its AI definition"
                    )
                events = [
                    self._event(
                        term_id,
                        actor,
                        Action.AI_GENERATION_REQUESTED,
                        {
                            "generation_id": generation_id,
                            "backend_id": self._backend.id,
                            "prompt": prompt.rendered,
                            "template_version": TEMPLATE_VERSION,
                            "feedback_ids": [],
                        },
                    )
                ]
                events += self._events_for_result(term_id, generation_id, result)
                if result.outcome is Outcome.SUCCESS:
                    events.append(
                        self._event(
                            term_id,
                            self._ai_actor(),
                            Action.DEFINITION_ADDED,
                            {
                                "definition_id": definition_id,
                                "body": result.body,
                                "kind": DefinitionKind.AI.value,
                                "author": self._ai_actor().to_dict(),
                            },
                        )
                    )
                return events, definition_id

            mutation = self._mutate(term_id, build)
            return GenerationOutcome(
                generation_id=generation_id, result=result, mutation=mutation
            )

    def refine_ai_definition(
        self,
        actor: ActorRef,
        term_id: str,
        params: GenerationParams | None = None,
    ) -> GenerationOutcome:
        """Revise the AI definition against the queued feedback.

        Success consumes exactly the feedback that was in the queue when
        the backend was called; feedback arriving mid-flight stays queued.
        """
        with self._generation_locks[term_id]:
            aggregate = self._store.load_aggregate(term_id)
            state = aggregate.state
            ai_definition = state.ai_definition()
            if ai_definition is None:
                raise NoAIDefinition(f"term {term_id} has no AI definition to refine")
            consumed = list(state.negotiation.pending_feedback)
            if not consumed:
                raise NoPendingFeedback(f"term {term_id} has no feedback queued")
            by_id = {c.id: c for c in state.comments_for(ai_definition.id)}
            feedback_bodies = [by_id[cid].body for cid in consumed if cid in by_id]
            prompt = build_prompt(
                state.term.label,
                [d.body for d in state.human_definitions()],
                [e.body for e in state.examples],
                feedback=feedback_bodies,
            )
            generation_id = self._ids.new_id("g")
            result = call_with_retries(
                self._backend,
                prompt.rendered,
                params=params,
                attempts=self._backend_attempts,
                sleep=self._sleep,
            )

            def build(state: TermState) -> tuple[list[ProvenanceEvent], str | None]:
                current = state.ai_definition()
                if current is None:
                    raise NoAIDefinition(f"term {term_id} has no AI definition to refine")
                events = [
                    self._event(
                        term_id,
                        actor,
                        Action.AI_GENERATION_REQUESTED,
                        {
                            "generation_id": generation_id,
                            "backend_id": self._backend.id,
                            "prompt": prompt.rendered,
                            "template_version": TEMPLATE_VERSION,
                            "feedback_ids": list(consumed),
                        },
                    )
                ]
                events += self._events_for_result(term_id, generation_id, result)
                if result.outcome is Outcome.SUCCESS:
                    remaining = [
                        cid
                        for cid in state.negotiation.pending_feedback
                        if cid not in consumed
                    ]
                    next_phase = Phase.FEEDBACK_PENDING if remaining else Phase.AI_PROPOSED
                    events.append(
                        self._event(
                            term_id,
                            self._ai_actor(),
                            Action.DEFINITION_REVISED,
                            {
                                "definition_id": current.id,
                                "prior_body": current.body,
                                "new_body": result.body,
                                "version": current.version + 1,
                            },
                        )
                    )
                    events.append(
                        self._event(
                            term_id,
                            self._ai_actor(),
                            Action.NEGOTIATION_STATE_CHANGED,
                            {
                                "phase": next_phase.value,
                                "pending_feedback": remaining,
                                "reason": "refinement_applied",
                            },
                        )
                    )
                return events, current.id if result.outcome is Outcome.SUCCESS else None

            mutation = self._mutate(term_id, build)
            return GenerationOutcome(
                generation_id=generation_id, result=result, mutation=mutation
            )

    def _events_for_result(
        self, term_id: str, generation_id: str, result: GenerationResult
    ) -> list[ProvenanceEvent]:
        if result.outcome is Outcome.SUCCESS:
            return [
                self._event(
                    term_id,
                    self._ai_actor(),
                    Action.AI_GENERATION_SUCCEEDED,
                    {
                        "generation_id": generation_id,
                        "backend_id": result.backend_id,
                        "body": result.body,
                        "latency_ms": result.latency_ms,
                    },
                )
            ]
        return [
            self._event(
                term_id,
                self._ai_actor(),
                Action.AI_GENERATION_FAILED,
                {
                    "generation_id": generation_id,
                    "backend_id": result.backend_id,
                    "failure_reason": result.failure_reason,
                    "latency_ms": result.latency_ms,
                },
            )
        ]

    def evaluate_convergence(self, term_id: str) -> Mutation:
        """Apply the convergence/stall rules; writes only on a phase change."""

        def build(state: TermState) -> tuple[list[ProvenanceEvent], str | None]:
            negotiation = state.negotiation
            ai_definition = state.ai_definition()
            if ai_definition is None:
                raise NoAIDefinition(f"term {term_id} has no AI definition")
            score = state.tally_for(ai_definition.id).score
            idle = (
                self._now() - negotiation.last_activity
                if negotiation.last_activity
                else timedelta(0)
            )
            new_phase = evaluate_phase(
                negotiation.phase,
                score=score,
                pending=len(negotiation.pending_feedback),
                idle=idle,
                threshold=self.acceptance_threshold,
                stall_window=self.stall_window,
            )
            if new_phase is negotiation.phase:
                return [], None
            reason = "converged" if new_phase is Phase.CONVERGED else "stalled"
            event = self._event(
                term_id,
                SYSTEM_ACTOR,
                Action.NEGOTIATION_STATE_CHANGED,
                {
                    "phase": new_phase.value,
                    "pending_feedback": list(negotiation.pending_feedback),
                    "reason": reason,
                },
            )
            return [event], None

        return self._mutate(term_id, build)
