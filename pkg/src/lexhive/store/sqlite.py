"""SQLite persistence: entity tables plus the append-only event log.

Every commit writes the projected rows and the new events in a single
transaction guarded by an optimistic version check on the term row, so the
queryable tables and the log cannot diverge without the audit noticing.
Reads reconstruct :class:`TermState` from the entity tables; ``audit``
replays each term's history and compares the two canonical forms.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Sequence

from lexhive.core.errors import (
    ClockSkew,
    ConflictRetry,
    DuplicateLabel,
    InvalidValue,
    MalformedPayload,
    MigrationFailure,
    SchemaMismatch,
    StorageUnavailable,
    UnknownTerm,
    UnknownUser,
)
from lexhive.core.models import (
    ActorKind,
    ActorRef,
    Comment,
    CommentDisposition,
    Definition,
    DefinitionKind,
    Example,
    NegotiationState,
    Phase,
    Term,
    TermState,
    TermStatus,
    User,
    UserRole,
    Vote,
    fold_label,
)
from lexhive.core.ops import recompute_tally
from lexhive.provenance.events import (
    CLOCK_SKEW_TOLERANCE,
    Action,
    ProvenanceEvent,
    validate_payload,
)
from lexhive.provenance.replay import canonical_state, replay, state_to_dict
from lexhive.serialize import canonical_json, iso, parse_iso


@dataclass(frozen=True)
class TermAggregate:
    """One term as the store sees it: projection, history, version."""

    state: TermState
    events: tuple[ProvenanceEvent, ...]
    version: int


@dataclass(frozen=True)
class CommitResult:
    version: int
    events: tuple[ProvenanceEvent, ...]  # seq assigned by the log

    @property
    def last_seq(self) -> int:
        return self.events[-1].seq  # type: ignore[return-value]


@dataclass(frozen=True)
class DirectoryEntry:
    term_id: str
    label: str
    tags: tuple[str, ...]
    definition_count: int
    example_count: int
    phase: Phase
    created_at: str


@dataclass(frozen=True)
class DirectoryPage:
    entries: tuple[DirectoryEntry, ...]
    page: int
    page_size: int
    total: int


@dataclass(frozen=True)
class SearchHit:
    term_id: str
    label: str
    matched: str  # "label" | "tag" | "definition"
    excerpt: str
    tags: tuple[str, ...]


@dataclass(frozen=True)
class AuditMismatch:
    term_id: str
    reason: str


@dataclass(frozen=True)
class AuditReport:
    terms_checked: int
    events_checked: int
    mismatches: tuple[AuditMismatch, ...]

    @property
    def ok(self) -> bool:
        return not self.mismatches


# Rank groups for search: where the query matched decides ordering.
_MATCH_LABEL = 0
_MATCH_TAG = 1
_MATCH_DEFINITION = 2
_MATCH_NAMES = {_MATCH_LABEL: "label", _MATCH_TAG: "tag", _MATCH_DEFINITION: "definition"}

_EXCERPT_LIMIT = 120


def _clip(text: str, limit: int = _EXCERPT_LIMIT) -> str:
    text = " ".join(text.split())
    if len(text) <= limit:
        return text
    return text[: limit - 3].rstrip() + "..."


def _database_path(url: str) -> str:
    """Accept ``sqlite:///`` URLs, bare paths, and ``:memory:``."""
    if url == ":memory:" or url == "sqlite:///:memory:":
        return ":memory:"
    if url.startswith("sqlite:///"):
        return url[len("sqlite:///") :]  # keeps a leading "/" for absolute paths
    if url.startswith("sqlite:"):
        raise InvalidValue(f"unsupported sqlite URL form: {url!r}")
    return url


def _migration_scripts() -> list[tuple[str, str]]:
    """(name, sql) pairs in apply order; numbering must be consecutive."""
    root = resources.files("lexhive.store").joinpath("migrations")
    scripts = sorted(
        (entry.name, entry.read_text(encoding="utf-8"))
        for entry in root.iterdir()
        if entry.name.endswith(".sql")
    )
    for position, (name, _) in enumerate(scripts, start=1):
        number = int(name.split("_", 1)[0])
        if number != position:
            raise MigrationFailure(f"migration numbering gap at {name}")
    return scripts


def _actor(kind: str, actor_id: str) -> ActorRef:
    return ActorRef(kind=ActorKind(kind), id=actor_id)


class SqliteStore:
    """Single-connection store; a process-wide lock serializes writers.

    SQLite already serializes at the file level; the lock exists so one
    connection can be shared across API worker threads safely.
    """

    def __init__(self, url: str = ":memory:", *, timeout: float = 5.0):
        self._path = _database_path(url)
        try:
            self._conn = sqlite3.connect(self._path, timeout=timeout, check_same_thread=False)
        except sqlite3.Error as exc:
            raise StorageUnavailable(f"cannot open database {self._path!r}: {exc}") from exc
        self._conn.row_factory = sqlite3.Row
        self._conn.isolation_level = None  # explicit BEGIN/COMMIT only
        self._conn.execute("PRAGMA foreign_keys = ON")
        if self._path != ":memory:":
            self._conn.execute("PRAGMA journal_mode = WAL")
        self._lock = threading.RLock()
        self._schema_checked = False
        # Test hook: runs inside the commit transaction, after entity rows are
        # written and before events are appended. A raise here must leave no
        # trace of either write.
        self.crash_probe: Callable[[], None] | None = None

    def close(self) -> None:
        self._conn.close()

    def __enter__(self) -> "SqliteStore":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()

    # -- schema ----------------------------------------------------------

    def schema_version(self) -> int:
        with self._lock:
            return self._meta_version()

    def _meta_version(self) -> int:
        try:
            row = self._conn.execute(
                "SELECT value FROM meta WHERE key = 'schema_version'"
            ).fetchone()
        except sqlite3.OperationalError:
            return 0  # meta table absent: fresh database
        return int(row["value"]) if row else 0

    def migrate(self, target_version: int | None = None) -> list[str]:
        """Apply pending migrations up to ``target_version`` (default: all).

        Returns the names applied; re-running at the latest version is a
        no-op, and a downgrade request is refused.
        """
        with self._lock:
            scripts = _migration_scripts()
            if target_version is None:
                target_version = len(scripts)
            if target_version > len(scripts):
                raise MigrationFailure(
                    f"no migration numbered {target_version}; newest is {len(scripts)}"
                )
            applied: list[str] = []
            name = "<none>"
            try:
                self._conn.execute("BEGIN IMMEDIATE")
                self._conn.execute(
                    "CREATE TABLE IF NOT EXISTS meta (key TEXT PRIMARY KEY, value TEXT NOT NULL)"
                )
                current = self._meta_version()
                if current > len(scripts):
                    raise SchemaMismatch(
                        f"database is at schema {current}, newest known is {len(scripts)}"
                    )
                if target_version < current:
                    raise MigrationFailure(
                        f"downgrade from schema {current} to {target_version} is not supported"
                    )
                for name, sql in scripts[current:target_version]:
                    # naive statement split: migration files carry no string
                    # literals or triggers, and comment lines are dropped
                    bare = "\n".join(
                        line for line in sql.splitlines()
                        if not line.lstrip().startswith("--")
                    )
                    for statement in bare.split(";"):
                        if statement.strip():
                            self._conn.execute(statement)
                    applied.append(name)
                self._conn.execute(
                    "INSERT INTO meta(key, value) VALUES ('schema_version', ?) "
                    "ON CONFLICT(key) DO UPDATE SET value = excluded.value",
                    (str(max(current, target_version)),),
                )
                self._conn.execute("COMMIT")
            except BaseException as exc:
                self._conn.execute("ROLLBACK")
                if isinstance(exc, SchemaMismatch):
                    raise
                if isinstance(exc, sqlite3.Error):
                    raise MigrationFailure(f"migration {name} failed: {exc}") from exc
                raise
            # a partial migrate leaves the store unusable until finished
            self._schema_checked = max(current, target_version) == len(scripts)
            return applied

    def _require_schema(self) -> None:
        if self._schema_checked:
            return
        expected = len(_migration_scripts())
        found = self._meta_version()
        if found != expected:
            raise SchemaMismatch(
                f"database is at schema {found}, code expects {expected}; run migrate"
            )
        self._schema_checked = True

    # -- users -----------------------------------------------------------

    def save_user(self, user: User) -> None:
        with self._lock:
            self._require_schema()
            self._conn.execute(
                "INSERT INTO users(id, identity_subject, display_name, role) "
                "VALUES (?, ?, ?, ?) "
                "ON CONFLICT(id) DO UPDATE SET "
                "display_name = excluded.display_name, role = excluded.role",
                (user.id, user.identity_subject, user.display_name, user.role.value),
            )

    def get_user(self, user_id: str) -> User:
        with self._lock:
            self._require_schema()
            row = self._conn.execute("SELECT * FROM users WHERE id = ?", (user_id,)).fetchone()
        if row is None:
            raise UnknownUser(f"no user with id {user_id!r}")
        return self._user_from_row(row)

    def find_user_by_subject(self, subject: str) -> User | None:
        with self._lock:
            self._require_schema()
            row = self._conn.execute(
                "SELECT * FROM users WHERE identity_subject = ?", (subject,)
            ).fetchone()
        return self._user_from_row(row) if row else None

    def list_users(self) -> list[User]:
        with self._lock:
            self._require_schema()
            rows = self._conn.execute("SELECT * FROM users ORDER BY rowid").fetchall()
        return [self._user_from_row(row) for row in rows]

    @staticmethod
    def _user_from_row(row: sqlite3.Row) -> User:
        return User(
            id=row["id"],
            display_name=row["display_name"],
            identity_subject=row["identity_subject"],
            role=UserRole(row["role"]),
        )

    # -- commit ----------------------------------------------------------

    def commit(
        self,
        state: TermState,
        events: Sequence[ProvenanceEvent],
        *,
        expected_version: int,
    ) -> CommitResult:
        """Write projection and events atomically.

        ``expected_version`` 0 means the term is new. A version check
        failure raises :class:`ConflictRetry`; the caller reloads and
        reapplies its operation.
        """
        if not events:
            raise InvalidValue("commit requires at least one event")
        for event in events:
            validate_payload(event.action, event.payload)
            if event.term_id != state.term.id:
                raise InvalidValue(
                    f"event for term {event.term_id!r} in commit of {state.term.id!r}"
                )
        with self._lock:
            self._require_schema()
            try:
                self._conn.execute("BEGIN IMMEDIATE")
                self._write_term_row(state, expected_version)
                self._write_children(state)
                if self.crash_probe is not None:
                    self.crash_probe()
                stored = self._append_events(state.term.id, events)
                self._conn.execute("COMMIT")
            except BaseException as exc:
                self._conn.execute("ROLLBACK")
                if isinstance(exc, sqlite3.IntegrityError) and "label_folded" in str(exc):
                    raise DuplicateLabel(
                        f"an active term with label {state.term.label!r} already exists"
                    ) from exc
                if isinstance(exc, sqlite3.Error):
                    raise StorageUnavailable(f"commit failed: {exc}") from exc
                raise
            return CommitResult(version=expected_version + 1, events=stored)

    def _write_term_row(self, state: TermState, expected_version: int) -> None:
        term = state.term
        tags_json = json.dumps(sorted(term.tags))
        if expected_version == 0:
            self._conn.execute(
                "INSERT INTO terms(id, label, label_folded, tags, status, "
                "created_by_kind, created_by_id, created_at, aggregate_version) "
                "VALUES (?, ?, ?, ?, ?, ?, ?, ?, 1)",
                (
                    term.id,
                    term.label,
                    fold_label(term.label),
                    tags_json,
                    term.status.value,
                    term.created_by.kind.value,
                    term.created_by.id,
                    iso(term.created_at),
                ),
            )
            return
        cursor = self._conn.execute(
            "UPDATE terms SET label = ?, label_folded = ?, tags = ?, status = ?, "
            "aggregate_version = ? WHERE id = ? AND aggregate_version = ?",
            (
                term.label,
                fold_label(term.label),
                tags_json,
                term.status.value,
                expected_version + 1,
                term.id,
                expected_version,
            ),
        )
        if cursor.rowcount == 0:
            exists = self._conn.execute(
                "SELECT 1 FROM terms WHERE id = ?", (term.id,)
            ).fetchone()
            if exists is None:
                raise UnknownTerm(f"no term with id {term.id!r}")
            raise ConflictRetry(
                f"term {term.id} moved past version {expected_version}"
            )

    def _write_children(self, state: TermState) -> None:
        term_id = state.term.id
        for table in ("votes", "comments", "examples", "definitions", "negotiation"):
            self._conn.execute(f"DELETE FROM {table} WHERE term_id = ?", (term_id,))
        self._conn.executemany(
            "INSERT INTO definitions(id, term_id, body, author_kind, author_id, "
            "kind, version, created_at, updated_at) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)",
            [
                (
                    d.id,
                    term_id,
                    d.body,
                    d.author.kind.value,
                    d.author.id,
                    d.kind.value,
                    d.version,
                    iso(d.created_at),
                    iso(d.updated_at),
                )
                for d in state.definitions.values()
            ],
        )
        self._conn.executemany(
            "INSERT INTO examples(id, term_id, body, author_kind, author_id, created_at) "
            "VALUES (?, ?, ?, ?, ?, ?)",
            [
                (e.id, term_id, e.body, e.author.kind.value, e.author.id, iso(e.created_at))
                for e in state.examples
            ],
        )
        self._conn.executemany(
            "INSERT INTO comments(id, term_id, definition_id, author_kind, author_id, "
            "body, disposition, created_at) VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
            [
                (
                    c.id,
                    term_id,
                    c.target_definition_id,
                    c.author.kind.value,
                    c.author.id,
                    c.body,
                    c.disposition.value,
                    iso(c.created_at),
                )
                for comments in state.comments.values()
                for c in comments
            ],
        )
        self._conn.executemany(
            "INSERT INTO votes(definition_id, user_id, term_id, value, cast_at) "
            "VALUES (?, ?, ?, ?, ?)",
            [
                (v.definition_id, v.user_id, term_id, v.value, iso(v.cast_at))
                for rows in state.votes.values()
                for v in rows.values()
            ],
        )
        negotiation = state.negotiation
        self._conn.execute(
            "INSERT INTO negotiation(term_id, phase, pending_feedback, last_activity) "
            "VALUES (?, ?, ?, ?)",
            (
                term_id,
                negotiation.phase.value,
                json.dumps(list(negotiation.pending_feedback)),
                iso(negotiation.last_activity) if negotiation.last_activity else None,
            ),
        )

    def _append_events(
        self, term_id: str, events: Sequence[ProvenanceEvent]
    ) -> tuple[ProvenanceEvent, ...]:
        row = self._conn.execute(
            "SELECT occurred_at FROM events WHERE term_id = ? ORDER BY seq DESC LIMIT 1",
            (term_id,),
        ).fetchone()
        floor = parse_iso(row["occurred_at"]) if row else None
        stored: list[ProvenanceEvent] = []
        for event in events:
            if floor is not None and event.occurred_at < floor - CLOCK_SKEW_TOLERANCE:
                raise ClockSkew(
                    f"event time {iso(event.occurred_at)} precedes log head "
                    f"{iso(floor)} by more than {CLOCK_SKEW_TOLERANCE.total_seconds():g}s"
                )
            floor = event.occurred_at if floor is None else max(floor, event.occurred_at)
            cursor = self._conn.execute(
                "INSERT INTO events(term_id, actor_kind, actor_id, action, payload, "
                "occurred_at) VALUES (?, ?, ?, ?, ?, ?)",
                (
                    term_id,
                    event.actor.kind.value,
                    event.actor.id,
                    event.action.value,
                    canonical_json(dict(event.payload)),
                    iso(event.occurred_at),
                ),
            )
            stored.append(event.with_seq(cursor.lastrowid))
        return tuple(stored)

    # -- reads -----------------------------------------------------------

    def load_aggregate(self, term_id: str) -> TermAggregate:
        with self._lock:
            self._require_schema()
            row = self._conn.execute("SELECT * FROM terms WHERE id = ?", (term_id,)).fetchone()
            if row is None:
                raise UnknownTerm(f"no term with id {term_id!r}")
            state = self._state_from_rows(row)
            events = self._events_for_term(term_id)
        return TermAggregate(state=state, events=events, version=row["aggregate_version"])

    def _state_from_rows(self, term_row: sqlite3.Row) -> TermState:
        term_id = term_row["id"]
        term = Term(
            id=term_id,
            label=term_row["label"],
            tags=frozenset(json.loads(term_row["tags"])),
            created_by=_actor(term_row["created_by_kind"], term_row["created_by_id"]),
            created_at=parse_iso(term_row["created_at"]),
            status=TermStatus(term_row["status"]),
        )
        state = TermState(term=term)
        for row in self._conn.execute(
            "SELECT * FROM definitions WHERE term_id = ? ORDER BY rowid", (term_id,)
        ):
            state.definitions[row["id"]] = Definition(
                id=row["id"],
                term_id=term_id,
                body=row["body"],
                author=_actor(row["author_kind"], row["author_id"]),
                kind=DefinitionKind(row["kind"]),
                version=row["version"],
                created_at=parse_iso(row["created_at"]),
                updated_at=parse_iso(row["updated_at"]),
            )
        for row in self._conn.execute(
            "SELECT * FROM examples WHERE term_id = ? ORDER BY rowid", (term_id,)
        ):
            state.examples.append(
                Example(
                    id=row["id"],
                    term_id=term_id,
                    body=row["body"],
                    author=_actor(row["author_kind"], row["author_id"]),
                    created_at=parse_iso(row["created_at"]),
                )
            )
        for row in self._conn.execute(
            "SELECT * FROM comments WHERE term_id = ? ORDER BY rowid", (term_id,)
        ):
            comment = Comment(
                id=row["id"],
                target_definition_id=row["definition_id"],
                author=_actor(row["author_kind"], row["author_id"]),
                body=row["body"],
                created_at=parse_iso(row["created_at"]),
                disposition=CommentDisposition(row["disposition"]),
            )
            state.comments.setdefault(comment.target_definition_id, []).append(comment)
        for row in self._conn.execute(
            "SELECT * FROM votes WHERE term_id = ? ORDER BY rowid", (term_id,)
        ):
            vote = Vote(
                user_id=row["user_id"],
                definition_id=row["definition_id"],
                value=row["value"],
                cast_at=parse_iso(row["cast_at"]),
            )
            state.votes.setdefault(vote.definition_id, {})[vote.user_id] = vote
        for definition_id, rows in state.votes.items():
            state.tallies[definition_id] = recompute_tally(rows.values())
        negotiation_row = self._conn.execute(
            "SELECT * FROM negotiation WHERE term_id = ?", (term_id,)
        ).fetchone()
        if negotiation_row is not None:
            state.negotiation = NegotiationState(
                term_id=term_id,
                phase=Phase(negotiation_row["phase"]),
                pending_feedback=tuple(json.loads(negotiation_row["pending_feedback"])),
                last_activity=(
                    parse_iso(negotiation_row["last_activity"])
                    if negotiation_row["last_activity"]
                    else None
                ),
            )
        return state

    def _events_for_term(self, term_id: str) -> tuple[ProvenanceEvent, ...]:
        rows = self._conn.execute(
            "SELECT * FROM events WHERE term_id = ? ORDER BY seq", (term_id,)
        ).fetchall()
        return tuple(self._event_from_row(row) for row in rows)

    @staticmethod
    def _event_from_row(row: sqlite3.Row) -> ProvenanceEvent:
        return ProvenanceEvent(
            term_id=row["term_id"],
            actor=_actor(row["actor_kind"], row["actor_id"]),
            action=Action(row["action"]),
            payload=json.loads(row["payload"]),
            occurred_at=parse_iso(row["occurred_at"]),
            seq=row["seq"],
        )

    def all_events(self) -> list[ProvenanceEvent]:
        """Complete log in global order."""
        with self._lock:
            self._require_schema()
            rows = self._conn.execute("SELECT * FROM events ORDER BY seq").fetchall()
        return [self._event_from_row(row) for row in rows]

    def find_term_id(self, label: str) -> str | None:
        """Active-term lookup by case-folded label."""
        with self._lock:
            self._require_schema()
            row = self._conn.execute(
                "SELECT id FROM terms WHERE label_folded = ? AND status = 'active'",
                (fold_label(label),),
            ).fetchone()
        return row["id"] if row else None

    def find_term_for_definition(self, definition_id: str) -> str | None:
        """Owning term of a definition, for definition-addressed routes."""
        with self._lock:
            self._require_schema()
            row = self._conn.execute(
                "SELECT term_id FROM definitions WHERE id = ?", (definition_id,)
            ).fetchone()
        return row["term_id"] if row else None

    def all_term_ids(self) -> list[str]:
        """Every term id in creation order, archived included."""
        with self._lock:
            self._require_schema()
            rows = self._conn.execute("SELECT id FROM terms ORDER BY rowid").fetchall()
        return [row["id"] for row in rows]

    def term_ids_by_label(self) -> list[str]:
        """Active term ids in directory order."""
        with self._lock:
            self._require_schema()
            rows = self._conn.execute(
                "SELECT id FROM terms WHERE status = 'active' ORDER BY label_folded, id"
            ).fetchall()
        return [row["id"] for row in rows]

    # -- directory and search -------------------------------------------

    def list_directory(self, page: int = 0, page_size: int = 20) -> DirectoryPage:
        if page < 0:
            raise InvalidValue("page must be >= 0")
        if not 1 <= page_size <= 500:
            raise InvalidValue("page_size must be between 1 and 500")
        with self._lock:
            self._require_schema()
            total = self._conn.execute(
                "SELECT COUNT(*) AS n FROM terms WHERE status = 'active'"
            ).fetchone()["n"]
            rows = self._conn.execute(
                "SELECT t.id, t.label, t.tags, t.created_at, n.phase, "
                "  (SELECT COUNT(*) FROM definitions d WHERE d.term_id = t.id) AS defs, "
                "  (SELECT COUNT(*) FROM examples e WHERE e.term_id = t.id) AS exs "
                "FROM terms t LEFT JOIN negotiation n ON n.term_id = t.id "
                "WHERE t.status = 'active' "
                "ORDER BY t.label_folded, t.id LIMIT ? OFFSET ?",
                (page_size, page * page_size),
            ).fetchall()
        entries = tuple(
            DirectoryEntry(
                term_id=row["id"],
                label=row["label"],
                tags=tuple(sorted(json.loads(row["tags"]))),
                definition_count=row["defs"],
                example_count=row["exs"],
                phase=Phase(row["phase"]) if row["phase"] else Phase.NO_AI_DEFINITION,
                created_at=row["created_at"],
            )
            for row in rows
        )
        return DirectoryPage(entries=entries, page=page, page_size=page_size, total=total)

    def search_terms(self, query: str, limit: int = 20) -> list[SearchHit]:
        """Substring search over labels, tags, and definition bodies.

        Hits are grouped by where the match occurred (label before tag
        before definition body) and ordered by folded label within a group.
        """
        folded = query.strip().casefold()
        if not folded:
            return []
        if limit < 1:
            raise InvalidValue("limit must be >= 1")
        with self._lock:
            self._require_schema()
            rows = self._conn.execute(
                "SELECT id, label, label_folded, tags FROM terms WHERE status = 'active'"
            ).fetchall()
            hits: list[tuple[int, str, str, SearchHit]] = []
            for row in rows:
                group = self._match_group(row, folded)
                excerpt, body_matched = self._excerpt_for(row["id"], folded, group)
                if group == _MATCH_DEFINITION and not body_matched:
                    continue
                hit = SearchHit(
                    term_id=row["id"],
                    label=row["label"],
                    matched=_MATCH_NAMES[group],
                    excerpt=excerpt,
                    tags=tuple(sorted(json.loads(row["tags"]))),
                )
                hits.append((group, row["label_folded"], row["id"], hit))
        hits.sort(key=lambda item: item[:3])
        return [hit for _, _, _, hit in hits[:limit]]

    @staticmethod
    def _match_group(row: sqlite3.Row, folded: str) -> int:
        if folded in row["label_folded"]:
            return _MATCH_LABEL
        if any(folded in tag.casefold() for tag in json.loads(row["tags"])):
            return _MATCH_TAG
        return _MATCH_DEFINITION  # candidate; definition bodies checked next

    def _excerpt_for(self, term_id: str, folded: str, group: int) -> tuple[str, bool]:
        """Excerpt text plus whether a definition body matched the query."""
        if group == _MATCH_DEFINITION:
            for row in self._conn.execute(
                "SELECT body FROM definitions WHERE term_id = ? ORDER BY rowid", (term_id,)
            ):
                if folded in row["body"].casefold():
                    return _clip(row["body"]), True
            return "", False
        top = self._conn.execute(
            "SELECT d.body, COALESCE((SELECT SUM(v.value) FROM votes v "
            "WHERE v.definition_id = d.id), 0) AS score "
            "FROM definitions d WHERE d.term_id = ? "
            "ORDER BY score DESC, d.created_at ASC, d.id ASC LIMIT 1",
            (term_id,),
        ).fetchone()
        return (_clip(top["body"]) if top else "", False)

    # -- import and audit ------------------------------------------------

    def import_events(self, events: Sequence[ProvenanceEvent]) -> int:
        """Rebuild an empty store from an exported log, preserving seq."""
        with self._lock:
            self._require_schema()
            existing = self._conn.execute("SELECT COUNT(*) AS n FROM events").fetchone()["n"]
            if existing:
                raise InvalidValue("refusing to import into a store that already has history")
            last_seq = 0
            per_term: dict[str, list[ProvenanceEvent]] = {}
            for event in events:
                if event.seq is None:
                    raise MalformedPayload("imported events must carry seq")
                if event.seq <= last_seq:
                    raise MalformedPayload(f"seq not strictly increasing at {event.seq}")
                last_seq = event.seq
                validate_payload(event.action, event.payload)
                per_term.setdefault(event.term_id, []).append(event)
            try:
                self._conn.execute("BEGIN IMMEDIATE")
                for term_id, history in per_term.items():
                    state = replay(history)
                    self._write_term_row(state, expected_version=0)
                    # Version check fields beyond 1 need a direct update;
                    # imported versions restart at the event count.
                    self._conn.execute(
                        "UPDATE terms SET aggregate_version = ? WHERE id = ?",
                        (len(history), term_id),
                    )
                    self._write_children(state)
                    self._conn.executemany(
                        "INSERT INTO events(seq, term_id, actor_kind, actor_id, action, "
                        "payload, occurred_at) VALUES (?, ?, ?, ?, ?, ?, ?)",
                        [
                            (
                                e.seq,
                                e.term_id,
                                e.actor.kind.value,
                                e.actor.id,
                                e.action.value,
                                canonical_json(dict(e.payload)),
                                iso(e.occurred_at),
                            )
                            for e in history
                        ],
                    )
                self._conn.execute("COMMIT")
            except BaseException as exc:
                self._conn.execute("ROLLBACK")
                if isinstance(exc, sqlite3.Error):
                    raise StorageUnavailable(f"import failed: {exc}") from exc
                raise
        return sum(len(history) for history in per_term.values())

    def audit(self) -> AuditReport:
        """Replay every history and compare with the entity projection."""
        with self._lock:
            self._require_schema()
            mismatches: list[AuditMismatch] = []
            term_rows = self._conn.execute("SELECT * FROM terms ORDER BY rowid").fetchall()
            events_checked = self._conn.execute(
                "SELECT COUNT(*) AS n FROM events"
            ).fetchone()["n"]
            orphans = self._conn.execute(
                "SELECT DISTINCT term_id FROM events "
                "WHERE term_id NOT IN (SELECT id FROM terms) ORDER BY term_id"
            ).fetchall()
            for row in orphans:
                mismatches.append(
                    AuditMismatch(term_id=row["term_id"], reason="events without a term row")
                )
            for term_row in term_rows:
                term_id = term_row["id"]
                history = self._events_for_term(term_id)
                if not history:
                    mismatches.append(
                        AuditMismatch(term_id=term_id, reason="term row without events")
                    )
                    continue
                try:
                    replayed = replay(history)
                except Exception as exc:  # any replay failure is a finding
                    mismatches.append(
                        AuditMismatch(term_id=term_id, reason=f"replay failed: {exc}")
                    )
                    continue
                projected = self._state_from_rows(term_row)
                if canonical_state(replayed) != canonical_state(projected):
                    detail = _first_difference(
                        state_to_dict(replayed), state_to_dict(projected)
                    )
                    mismatches.append(
                        AuditMismatch(
                            term_id=term_id,
                            reason=f"projection differs from replay at {detail}",
                        )
                    )
        return AuditReport(
            terms_checked=len(term_rows),
            events_checked=events_checked,
            mismatches=tuple(mismatches),
        )


def _first_difference(replayed: dict, projected: dict) -> str:
    for key in replayed:
        if canonical_json(replayed[key]) != canonical_json(projected.get(key)):
            return key
    return "<unknown>"
