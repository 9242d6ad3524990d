"""Dual-write persistence: entity projection plus append-only event log."""

from lexhive.store.sqlite import (
    AuditMismatch,
    AuditReport,
    CommitResult,
    DirectoryEntry,
    DirectoryPage,
    SearchHit,
    SqliteStore,
    TermAggregate,
)

__all__ = [
    "AuditMismatch",
    "AuditReport",
    "CommitResult",
    "DirectoryEntry",
    "DirectoryPage",
    "SearchHit",
    "SqliteStore",
    "TermAggregate",
]
