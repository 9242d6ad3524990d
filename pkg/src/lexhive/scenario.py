"""Scripted multi-user runs through the real HTTP surface.

A scenario script lists users, a backend failure schedule, and a timestamped
action sequence. The runner assembles an in-process app on a virtual clock
with sequential ids and the deterministic mock backend, drives every action
through HTTP, and reports a behavioral summary plus the canonical event-log
export. Identical scripts produce byte-identical logs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Any, Mapping

import yaml
from fastapi.testclient import TestClient

from lexhive.api.app import create_app
from lexhive.api.auth import StaticIdentityProvider
from lexhive.clock import VirtualClock
from lexhive.config import AppConfig
from lexhive.core.errors import ParseError, ScriptError
from lexhive.ids import SequentialIdFactory
from lexhive.provenance.events import Action, to_jsonl
from lexhive.refine.backends import MockBackend
from lexhive.serialize import parse_iso
from lexhive.store import SqliteStore

_KNOWN_ACTIONS = frozenset(
    {
        "create_term",
        "add_tag",
        "add_definition",
        "add_example",
        "generate_ai",
        "refine_ai",
        "comment",
        "vote",
    }
)

_SCENARIO_SECRET = "scenario-static-secret"


@dataclass(frozen=True)
class ScenarioAction:
    at: datetime
    user: str
    do: str
    args: Mapping[str, Any]


@dataclass(frozen=True)
class ScenarioScript:
    users: tuple[str, ...]
    backend_failures: tuple[str, ...]
    actions: tuple[ScenarioAction, ...]


@dataclass(frozen=True)
class ScenarioRun:
    summary: dict[str, int]
    log_jsonl: str
    term_ids: dict[str, str]  # label -> id


def parse_script(data: Any) -> ScenarioScript:
    if not isinstance(data, dict):
        raise ParseError("scenario script must be a mapping")
    users_raw = data.get("users")
    if not isinstance(users_raw, list) or not users_raw:
        raise ParseError("scenario script needs a non-empty users list")
    users: list[str] = []
    for entry in users_raw:
        name = entry.get("name") if isinstance(entry, dict) else entry
        if not isinstance(name, str) or not name.strip():
            raise ParseError("every user needs a non-empty name")
        users.append(name.strip())
    failures = tuple(str(label) for label in data.get("backend_failures", []))
    actions_raw = data.get("actions")
    if not isinstance(actions_raw, list) or not actions_raw:
        raise ParseError("scenario script needs a non-empty actions list")
    actions: list[ScenarioAction] = []
    for position, raw in enumerate(actions_raw):
        if not isinstance(raw, dict):
            raise ParseError(f"action {position} must be a mapping")
        try:
            at = parse_iso(str(raw["at"]))
        except (KeyError, ValueError) as exc:
            raise ParseError(f"action {position} needs a valid 'at' timestamp") from exc
        user = raw.get("user")
        if user not in users:
            raise ParseError(f"action {position} user {user!r} is not in the users list")
        do = raw.get("do")
        if do not in _KNOWN_ACTIONS:
            raise ParseError(f"action {position} kind {do!r} is not supported")
        args = {k: v for k, v in raw.items() if k not in ("at", "user", "do")}
        actions.append(ScenarioAction(at=at, user=user, do=do, args=args))
    for position in range(1, len(actions)):
        if actions[position].at < actions[position - 1].at:
            raise ParseError(f"action {position} timestamp moves backwards")
    return ScenarioScript(
        users=tuple(users), backend_failures=failures, actions=tuple(actions)
    )


def load_script(path: str | Path) -> ScenarioScript:
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ParseError(f"cannot read scenario script {path}: {exc}") from exc
    return parse_script(raw)


def _subject_for(name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    return f"sub-{slug}"


class _Runner:
    def __init__(self, script: ScenarioScript):
        self.script = script
        self.store = SqliteStore(":memory:")
        self.store.migrate()
        self.clock = VirtualClock(script.actions[0].at)
        config = AppConfig(
            database_url=":memory:",
            session_secret=_SCENARIO_SECRET,
            rate_limit_writes=0,
        )
        self.app = create_app(
            config,
            store=self.store,
            backend=MockBackend(fail_labels=script.backend_failures),
            clock=self.clock,
            ids=SequentialIdFactory(),
        )
        self.identity = StaticIdentityProvider(_SCENARIO_SECRET)
        # user -> (token, issued_at); sessions are re-established when the
        # virtual clock outruns the token lifetime
        self.sessions: dict[str, tuple[str, datetime]] = {}
        self.term_ids: dict[str, str] = {}

    def _login(self, client: TestClient, name: str) -> str:
        assertion = self.identity.assertion_for(_subject_for(name), name)
        response = client.post("/auth/login", json={"assertion": assertion})
        if response.status_code != 200:
            raise ScriptError(f"login failed for {name}: {response.text}")
        token = response.json()["token"]
        self.sessions[name] = (token, self.clock.now())
        return token

    def _headers(self, client: TestClient, user: str) -> dict[str, str]:
        session = self.sessions.get(user)
        if session is not None and self.clock.now() - session[1] < timedelta(hours=6):
            token = session[0]
        else:
            token = self._login(client, user)
        return {"Authorization": f"Bearer {token}"}

    def _term_id(self, position: int, args: Mapping[str, Any]) -> str:
        label = str(args.get("term", ""))
        term_id = self.term_ids.get(label)
        if term_id is None:
            raise ScriptError(f"action {position}: unknown term {label!r}")
        return term_id

    def _definition_id(
        self, client: TestClient, position: int, term_id: str, target: str
    ) -> str:
        detail = client.get(f"/terms/{term_id}").json()
        humans = [d for d in detail["definitions"] if d["kind"] == "human"]
        humans.sort(key=lambda d: d["created_at"])
        if target == "ai":
            for definition in detail["definitions"]:
                if definition["kind"] == "ai":
                    return definition["id"]
            raise ScriptError(f"action {position}: term has no AI definition")
        match = re.fullmatch(r"human(?::(\d+))?", target)
        if not match:
            raise ScriptError(f"action {position}: bad target {target!r}")
        index = int(match.group(1) or 1) - 1
        if index >= len(humans):
            raise ScriptError(
                f"action {position}: term has {len(humans)} human definitions, "
                f"wanted #{index + 1}"
            )
        return humans[index]["id"]

    def _run_action(
        self, client: TestClient, position: int, action: ScenarioAction
    ) -> None:
        args = action.args
        headers = self._headers(client, action.user)
        if action.do == "create_term":
            response = client.post(
                "/terms",
                json={"label": str(args["label"]), "tags": list(args.get("tags", []))},
                headers=headers,
            )
            if response.status_code == 201:
                self.term_ids[str(args["label"])] = response.json()["term"]["id"]
        elif action.do == "add_tag":
            response = client.post(
                f"/terms/{self._term_id(position, args)}/tags",
                json={"tag": str(args["tag"])},
                headers=headers,
            )
        elif action.do == "add_definition":
            response = client.post(
                f"/terms/{self._term_id(position, args)}/definitions",
                json={"body": str(args["body"])},
                headers=headers,
            )
        elif action.do == "add_example":
            response = client.post(
                f"/terms/{self._term_id(position, args)}/examples",
                json={"body": str(args["body"])},
                headers=headers,
            )
        elif action.do == "generate_ai":
            response = client.post(
                f"/terms/{self._term_id(position, args)}/ai-definition",
                headers=headers,
            )
        elif action.do == "refine_ai":
            response = client.post(
                f"/terms/{self._term_id(position, args)}/ai-definition/refine",
                headers=headers,
            )
        elif action.do == "comment":
            term_id = self._term_id(position, args)
            definition_id = self._definition_id(
                client, position, term_id, str(args.get("target", "ai"))
            )
            response = client.post(
                f"/definitions/{definition_id}/comments",
                json={
                    "body": str(args["body"]),
                    "disposition": str(args.get("disposition", "discussion")),
                },
                headers=headers,
            )
        else:  # vote
            term_id = self._term_id(position, args)
            definition_id = self._definition_id(
                client, position, term_id, str(args.get("target", "ai"))
            )
            response = client.put(
                f"/definitions/{definition_id}/vote",
                json={"value": int(args["value"])},
                headers=headers,
            )
        if response.status_code >= 400:
            raise ScriptError(
                f"action {position} ({action.do}): "
                f"{response.status_code} {response.text}"
            )

    def _summarize(self, client: TestClient) -> dict[str, int]:
        summary = {
            "terms": 0,
            "human_definitions": 0,
            "ai_definitions": 0,
            "generation_failures": 0,
            "comments": 0,
            "votes": 0,
            "terms_with_multiple_human_definitions": 0,
        }
        page = 0
        while True:
            listing = client.get(
                "/terms", params={"page": page, "page_size": 50}
            ).json()
            for entry in listing["terms"]:
                summary["terms"] += 1
                detail = client.get(f"/terms/{entry['id']}").json()
                humans = [d for d in detail["definitions"] if d["kind"] == "human"]
                ais = [d for d in detail["definitions"] if d["kind"] == "ai"]
                summary["human_definitions"] += len(humans)
                summary["ai_definitions"] += len(ais)
                if len(humans) >= 2:
                    summary["terms_with_multiple_human_definitions"] += 1
                summary["comments"] += sum(len(d["comments"]) for d in detail["definitions"])
            if (page + 1) * listing["page_size"] >= listing["total"]:
                break
            page += 1
        for event in self.store.all_events():
            if event.action is Action.AI_GENERATION_FAILED:
                summary["generation_failures"] += 1
            elif event.action is Action.VOTE_CAST:
                summary["votes"] += 1
        return summary

    def run(self) -> ScenarioRun:
        with TestClient(self.app) as client:
            for position, action in enumerate(self.script.actions):
                self.clock.set_to(action.at)
                self._run_action(client, position, action)
            summary = self._summarize(client)
        return ScenarioRun(
            summary=summary,
            log_jsonl=to_jsonl(self.store.all_events()),
            term_ids=dict(self.term_ids),
        )


def run_scenario(script: ScenarioScript) -> ScenarioRun:
    return _Runner(script).run()
