"""Regenerate the frozen API fixtures under test/fixtures/.

Drives the real backend in-process (virtual clock, sequential ids, mock
generation backend) through the documented HTTP surface, then saves the
exact JSON the web client would receive. Outputs are committed; rerun only
when the API shapes change, and review the diff.

Usage: python3 scripts/generate_fixtures.py
"""

from __future__ import annotations

import json
from datetime import datetime, timedelta, timezone
from pathlib import Path

from fastapi.testclient import TestClient

from lexhive.api.app import create_app
from lexhive.api.auth import StaticIdentityProvider
from lexhive.clock import VirtualClock
from lexhive.config import AppConfig
from lexhive.ids import SequentialIdFactory
from lexhive.refine.backends import MockBackend
from lexhive.store import SqliteStore

SECRET = "fixture-secret"
FIXTURES = Path(__file__).resolve().parent.parent / "test" / "fixtures"


def main() -> None:
    store = SqliteStore()
    store.migrate()
    clock = VirtualClock(datetime(2025, 7, 21, 9, 0, tzinfo=timezone.utc))
    app = create_app(
        AppConfig(session_secret=SECRET, rate_limit_writes=0),
        store=store,
        backend=MockBackend(),
        clock=clock,
        ids=SequentialIdFactory(),
        identity=StaticIdentityProvider(SECRET),
    )
    identity = StaticIdentityProvider(SECRET)

    with TestClient(app) as client:

        def login(subject: str, name: str) -> dict[str, str]:
            resp = client.post(
                "/auth/login", json={"assertion": identity.assertion_for(subject, name)}
            )
            resp.raise_for_status()
            return {"Authorization": f"Bearer {resp.json()['token']}"}

        def post(path: str, body: dict | None, headers: dict[str, str]) -> dict:
            resp = client.post(path, json=body, headers=headers) if body is not None \
                else client.post(path, headers=headers)
            assert resp.status_code < 400, (path, resp.status_code, resp.text)
            clock.advance(timedelta(minutes=17))
            return resp.json()

        ben = login("sub-ben", "Ben Okafor")
        chen = login("sub-chen", "Chen Wei")

        # the dielectric exchange: draft, feedback, revision, acceptance votes
        created = post("/terms", {"label": "dielectric", "tags": ["electronic"]}, ben)
        dielectric = created["term"]["id"]
        post(
            f"/terms/{dielectric}/definitions",
            {"body": "An electrically insulating material that can be polarized "
                     "by an applied electric field."},
            ben,
        )
        post(
            f"/terms/{dielectric}/examples",
            {"body": "Hafnium oxide serves as the gate dielectric in modern "
                     "transistors."},
            ben,
        )
        generated = post(f"/terms/{dielectric}/ai-definition", None, chen)
        ai_definition = generated["definition_id"]
        post(
            f"/definitions/{ai_definition}/comments",
            {"body": "Mention energy storage in capacitors, not just transistor "
                     "gates.",
             "disposition": "feedback"},
            chen,
        )
        post(f"/terms/{dielectric}/ai-definition/refine", None, ben)
        client.put(f"/definitions/{ai_definition}/vote", json={"value": 1}, headers=ben)
        clock.advance(timedelta(minutes=9))
        client.put(f"/definitions/{ai_definition}/vote", json={"value": 1}, headers=chen)
        clock.advance(timedelta(minutes=9))

        # a few more terms so the directory and search have something to show
        melt = post("/terms", {"label": "melt", "tags": ["thermal"]}, chen)["term"]["id"]
        post(
            f"/terms/{melt}/definitions",
            {"body": "Transition of a solid into a liquid as temperature rises."},
            chen,
        )
        post(
            f"/terms/{melt}/examples",
            {"body": "The alloy begins to melt at 660 degrees Celsius."},
            chen,
        )
        boundary = post("/terms", {"label": "grain boundary", "tags": ["structure"]}, ben)
        post(
            f"/terms/{boundary['term']['id']}/definitions",
            {"body": "The interface where two crystallites of different "
                     "orientation meet."},
            ben,
        )

        fixtures = {
            "dielectric_term.json": client.get(f"/terms/{dielectric}").json(),
            "dielectric_provenance.json": client.get(
                f"/terms/{dielectric}/provenance", params={"order": "oldest_first"}
            ).json(),
            "directory.json": client.get(
                "/terms", params={"page": 0, "page_size": 20}
            ).json(),
            "search_melt.json": client.get("/search", params={"q": "melt"}).json(),
        }

    FIXTURES.mkdir(parents=True, exist_ok=True)
    for name, payload in fixtures.items():
        path = FIXTURES / name
        path.write_text(json.dumps(payload, indent=2, ensure_ascii=False) + "\n",
                        encoding="utf-8")
        print(f"wrote {path.relative_to(FIXTURES.parent.parent)}")
    store.close()


if __name__ == "__main__":
    main()
