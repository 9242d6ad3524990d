"""HTTP application assembly and route handlers.

All handlers are thin: validate, call the engine, present. Writes require a
session token and pass through a per-user sliding-window rate limit;
generation endpoints run the backend inline and answer 202 with the
recorded outcome.
"""

from __future__ import annotations

import threading
import time
from collections import defaultdict, deque
from contextlib import asynccontextmanager
from datetime import timedelta
from typing import Literal

from fastapi import Depends, FastAPI, Request
from fastapi.responses import JSONResponse

from lexhive.api.auth import (
    IdentityProvider,
    OidcIdentityProvider,
    StaticIdentityProvider,
    issue_token,
    verify_token,
)
from lexhive.api.errors import register_error_handlers
from lexhive.api.schemas import (
    CommentCreate,
    DefinitionCreate,
    ExampleCreate,
    LoginRequest,
    TagAdd,
    TermCreate,
    VoteSet,
    comment_out,
    definition_out,
    directory_out,
    example_out,
    search_out,
    term_detail,
    timeline_out,
    user_out,
)
from lexhive.clock import Clock
from lexhive.config import AppConfig, build_backend, build_store, load_config
from lexhive.core.errors import InvalidToken, RateLimited
from lexhive.core.models import ActorKind, ActorRef, CommentDisposition, User
from lexhive.ids import IdFactory
from lexhive.provenance.timeline import TimelineOrder
from lexhive.refine.backends import GenerationBackend
from lexhive.service import GenerationOutcome, VocabService
from lexhive.store import SqliteStore


class _WriteRateLimiter:
    """Sliding window over wall-clock seconds, one window per user."""

    def __init__(self, max_writes: int, window_seconds: float):
        self.max_writes = max_writes
        self.window_seconds = window_seconds
        self._events: defaultdict[str, deque[float]] = defaultdict(deque)
        self._lock = threading.Lock()

    def check(self, user_id: str) -> None:
        if self.max_writes <= 0:
            return
        now = time.monotonic()
        with self._lock:
            window = self._events[user_id]
            while window and now - window[0] > self.window_seconds:
                window.popleft()
            if len(window) >= self.max_writes:
                raise RateLimited(
                    f"more than {self.max_writes} writes in "
                    f"{self.window_seconds:g}s; slow down"
                )
            window.append(now)


def _build_identity(config: AppConfig) -> IdentityProvider:
    if config.auth_mode == "oidc":
        return OidcIdentityProvider(config.oidc_issuer, config.oidc_client_id)
    return StaticIdentityProvider(config.session_secret)


def create_app(
    config: AppConfig | None = None,
    *,
    store: SqliteStore | None = None,
    backend: GenerationBackend | None = None,
    clock: Clock | None = None,
    ids: IdFactory | None = None,
    identity: IdentityProvider | None = None,
    service: VocabService | None = None,
) -> FastAPI:
    config = config or load_config()
    owns_store = store is None and service is None
    if service is None:
        store = store or build_store(config)
        if store.schema_version() == 0:
            store.migrate()
        service = VocabService(
            store,
            backend or build_backend(config),
            clock=clock,
            ids=ids,
            acceptance_threshold=config.acceptance_threshold,
            stall_window=timedelta(days=config.stall_window_days),
        )
    identity = identity or _build_identity(config)
    limiter = _WriteRateLimiter(config.rate_limit_writes, config.rate_limit_window_seconds)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        if owns_store:
            service.store.close()

    app = FastAPI(title="lexhive", lifespan=lifespan)
    register_error_handlers(app)
    app.state.service = service
    app.state.config = config
    app.state.identity = identity

    def _now():
        return service.clock.now()

    def current_user(request: Request) -> User:
        header = request.headers.get("Authorization", "")
        if not header.startswith("Bearer "):
            raise InvalidToken("missing bearer token")
        user_id = verify_token(
            config.session_secret, header[len("Bearer ") :], now=_now()
        )
        return service.get_user(user_id)

    def writing_user(request: Request) -> User:
        user = current_user(request)
        limiter.check(user.id)
        return user

    def _actor(user: User) -> ActorRef:
        return ActorRef(kind=ActorKind.HUMAN, id=user.id)

    def _generation_out(outcome: GenerationOutcome) -> JSONResponse:
        return JSONResponse(
            status_code=202,
            content={
                "generation_id": outcome.generation_id,
                "outcome": outcome.result.outcome.value,
                "definition_id": outcome.definition_id,
                "failure_reason": outcome.result.failure_reason,
                "provenance_seq": outcome.mutation.provenance_seq,
                "negotiation": {
                    "phase": outcome.mutation.state.negotiation.phase.value,
                    "pending_feedback": list(
                        outcome.mutation.state.negotiation.pending_feedback
                    ),
                },
            },
        )

    # -- routes ----------------------------------------------------------

    @app.get("/healthz")
    def healthz() -> dict:
        return {
            "status": "ok",
            "schema_version": service.store.schema_version(),
            "backend": service.backend_id,
        }

    @app.post("/auth/login")
    def login(body: LoginRequest) -> dict:
        verified = identity.verify(body.assertion)
        user = service.ensure_user(verified.subject, verified.display_name)
        token = issue_token(
            config.session_secret,
            user.id,
            now=_now(),
            ttl_seconds=config.session_ttl_seconds,
        )
        return {"token": token, "user": user_out(user)}

    @app.get("/terms")
    def list_terms(page: int = 0, page_size: int = 20) -> dict:
        return directory_out(service.store.list_directory(page, page_size))

    @app.post("/terms", status_code=201)
    def create_term(body: TermCreate, user: User = Depends(writing_user)) -> dict:
        mutation = service.create_term(_actor(user), body.label, body.tags)
        detail = term_detail(service.get_term(mutation.subject_id))
        detail["provenance_seq"] = mutation.provenance_seq
        return detail

    @app.get("/terms/{term_id}")
    def get_term(term_id: str) -> dict:
        return term_detail(service.get_term(term_id))

    @app.post("/terms/{term_id}/tags")
    def add_tag(term_id: str, body: TagAdd, user: User = Depends(writing_user)) -> dict:
        mutation = service.add_tag(_actor(user), term_id, body.tag)
        detail = term_detail(service.get_term(term_id))
        detail["provenance_seq"] = mutation.provenance_seq
        return detail

    @app.post("/terms/{term_id}/definitions", status_code=201)
    def add_definition(
        term_id: str, body: DefinitionCreate, user: User = Depends(writing_user)
    ) -> dict:
        mutation = service.add_definition(_actor(user), term_id, body.body)
        return {
            "definition_id": mutation.subject_id,
            "definition": definition_out(mutation.state, mutation.subject_id),
            "provenance_seq": mutation.provenance_seq,
        }

    @app.post("/terms/{term_id}/examples", status_code=201)
    def add_example(
        term_id: str, body: ExampleCreate, user: User = Depends(writing_user)
    ) -> dict:
        mutation = service.add_example(_actor(user), term_id, body.body)
        return {
            "example_id": mutation.subject_id,
            "example": example_out(mutation.state, mutation.subject_id),
            "provenance_seq": mutation.provenance_seq,
        }

    @app.post("/definitions/{definition_id}/comments", status_code=201)
    def add_comment(
        definition_id: str, body: CommentCreate, user: User = Depends(writing_user)
    ) -> dict:
        mutation = service.add_comment(
            _actor(user),
            definition_id,
            body.body,
            CommentDisposition(body.disposition),
        )
        state = mutation.state
        comment = next(
            c
            for comments in state.comments.values()
            for c in comments
            if c.id == mutation.subject_id
        )
        return {
            "comment_id": mutation.subject_id,
            "comment": comment_out(comment),
            "provenance_seq": mutation.provenance_seq,
            "negotiation": {
                "phase": state.negotiation.phase.value,
                "pending_feedback": list(state.negotiation.pending_feedback),
            },
        }

    @app.put("/definitions/{definition_id}/vote")
    def set_vote(
        definition_id: str, body: VoteSet, user: User = Depends(writing_user)
    ) -> dict:
        mutation = service.cast_vote(user, definition_id, body.value)
        return {
            "definition_id": definition_id,
            "value": body.value,
            "tally": mutation.state.tally_for(definition_id).to_dict(),
            "provenance_seq": mutation.provenance_seq,
        }

    @app.post("/terms/{term_id}/ai-definition")
    def generate_ai(term_id: str, user: User = Depends(writing_user)) -> JSONResponse:
        return _generation_out(service.generate_ai_definition(_actor(user), term_id))

    @app.post("/terms/{term_id}/ai-definition/refine")
    def refine_ai(term_id: str, user: User = Depends(writing_user)) -> JSONResponse:
        return _generation_out(service.refine_ai_definition(_actor(user), term_id))

    @app.get("/terms/{term_id}/provenance")
    def provenance(
        term_id: str,
        order: Literal["oldest_first", "newest_first"] = "newest_first",
    ) -> dict:
        entries = service.timeline(term_id, TimelineOrder(order))
        return timeline_out(term_id, order, entries)

    @app.get("/search")
    def search(q: str = "", limit: int = 20) -> dict:
        return search_out(q, service.store.search_terms(q, limit))

    return app
