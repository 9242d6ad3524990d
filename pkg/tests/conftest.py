"""Shared fixtures: everything in memory, every clock and id deterministic."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone

import pytest
from fastapi.testclient import TestClient

from lexhive.api.app import create_app
from lexhive.api.auth import StaticIdentityProvider
from lexhive.clock import VirtualClock
from lexhive.config import AppConfig
from lexhive.core.models import ActorKind, ActorRef, User
from lexhive.ids import SequentialIdFactory
from lexhive.refine.backends import MockBackend
from lexhive.service import VocabService
from lexhive.store import SqliteStore

EPOCH = datetime(2025, 6, 2, 9, 0, tzinfo=timezone.utc)
SECRET = "test-secret"


@pytest.fixture
def clock() -> VirtualClock:
    return VirtualClock(EPOCH)


@pytest.fixture
def ids() -> SequentialIdFactory:
    return SequentialIdFactory()


@pytest.fixture
def store():
    with SqliteStore() as s:
        s.migrate()
        yield s


@pytest.fixture
def backend() -> MockBackend:
    return MockBackend()


@pytest.fixture
def service(store, backend, clock, ids) -> VocabService:
    return VocabService(store, backend, clock=clock, ids=ids, sleep=lambda _: None)


@dataclass(frozen=True)
class Person:
    user: User
    actor: ActorRef


def _register(service: VocabService, subject: str, name: str) -> Person:
    user = service.ensure_user(subject, name)
    return Person(user=user, actor=ActorRef(kind=ActorKind.HUMAN, id=user.id))


@pytest.fixture
def alice(service) -> Person:
    return _register(service, "sub-alice", "Alice")


@pytest.fixture
def bob(service) -> Person:
    return _register(service, "sub-bob", "Bob")


@pytest.fixture
def cara(service) -> Person:
    return _register(service, "sub-cara", "Cara")


@pytest.fixture
def make_term(service, alice):
    """Create a term ready for AI generation: one definition, one example."""

    def _make(
        label: str,
        *,
        definition: str | None = "a human-written definition",
        example: str | None = "an example usage sentence",
        tags: tuple[str, ...] = (),
    ) -> str:
        term_id = service.create_term(alice.actor, label, list(tags)).subject_id
        if definition:
            service.add_definition(alice.actor, term_id, definition)
        if example:
            service.add_example(alice.actor, term_id, example)
        return term_id

    return _make


@pytest.fixture
def app_config() -> AppConfig:
    # limiter off by default; the rate-limit test builds its own app
    return AppConfig(
        database_url="sqlite://:memory:",
        session_secret=SECRET,
        rate_limit_writes=0,
    )


@pytest.fixture
def app(app_config, store, backend, clock, ids):
    return create_app(
        app_config,
        store=store,
        backend=backend,
        clock=clock,
        ids=ids,
        identity=StaticIdentityProvider(SECRET),
    )


@pytest.fixture
def client(app):
    with TestClient(app, raise_server_exceptions=False) as c:
        yield c


@pytest.fixture
def login(client):
    """Log a subject in through the API; returns Authorization headers."""
    identity = StaticIdentityProvider(SECRET)

    def _login(subject: str = "sub-alice", name: str = "Alice") -> dict[str, str]:
        resp = client.post(
            "/auth/login", json={"assertion": identity.assertion_for(subject, name)}
        )
        assert resp.status_code == 200, resp.text
        return {"Authorization": f"Bearer {resp.json()['token']}"}

    return _login
