"""Error vocabulary for the whole service.

Every subclass carries a machine-readable ``code``; the HTTP layer maps each
code to exactly one status. Keeping the registry in one module lets the API
prove mapping totality by walking ``DomainError`` subclasses.
"""

from __future__ import annotations

from typing import Any


class DomainError(Exception):
    """Base for all expected, user-visible failures."""

    code = "domain_error"

    def __init__(self, message: str | None = None, **details: Any):
        super().__init__(message or self.__doc__ or self.code)
        self.message = message or (self.__doc__ or self.code)
        self.details = details


# --- vocabulary rules ---------------------------------------------------

class EmptyLabel(DomainError):
    """Term label is empty after trimming whitespace."""

    code = "empty_label"


class DuplicateLabel(DomainError):
    """An active term with the same case-folded label already exists."""

    code = "duplicate_label"


class UnknownTerm(DomainError):
    """No term with the given identifier."""

    code = "unknown_term"


class EmptyBody(DomainError):
    """Definition, example, or comment body is empty."""

    code = "empty_body"


class EmptyTag(DomainError):
    """Tag is empty after trimming whitespace."""

    code = "empty_tag"


class AiDefinitionExists(DomainError):
    """The term already has its single AI definition; revise it instead."""

    code = "ai_definition_exists"


class UnknownDefinition(DomainError):
    """No definition with the given identifier."""

    code = "unknown_definition"


class NotAuthorized(DomainError):
    """The actor may not perform this operation on this resource."""

    code = "not_authorized"


class InvalidValue(DomainError):
    """Vote value must be +1 or -1."""

    code = "invalid_value"


class UnknownUser(DomainError):
    """No user with the given identifier."""

    code = "unknown_user"


# --- provenance log -----------------------------------------------------

class MalformedPayload(DomainError):
    """Event payload does not match the schema for its action."""

    code = "malformed_payload"


class ClockSkew(MalformedPayload):
    """Event timestamp precedes the log head by more than the allowed skew."""

    code = "clock_skew"


class CorruptHistory(DomainError):
    """Event history violates replay invariants."""

    code = "corrupt_history"


# --- AI refinement ------------------------------------------------------

class NoExample(DomainError):
    """Generation is example-initiated; the term has no example yet."""

    code = "no_example"


class NoAIDefinition(DomainError):
    """The term has no AI definition to act on."""

    code = "no_ai_definition"


class NoPendingFeedback(DomainError):
    """Refinement needs at least one queued feedback comment."""

    code = "no_pending_feedback"


class BackendUnavailable(DomainError):
    """Generation backend unreachable after retries."""

    code = "backend_unavailable"


# --- storage ------------------------------------------------------------

class ConflictRetry(DomainError):
    """Concurrent writer won the per-term version check; caller retries."""

    code = "conflict_retry"


class StorageUnavailable(DomainError):
    """Backing store unreachable or refused the operation."""

    code = "storage_unavailable"


class SchemaMismatch(StorageUnavailable):
    """Store schema version does not match the code; run migrations."""

    code = "schema_mismatch"


class MigrationFailure(DomainError):
    """Schema migration failed or was requested out of order."""

    code = "migration_failure"


# --- API / auth ---------------------------------------------------------

class InvalidAssertion(DomainError):
    """Identity assertion failed validation."""

    code = "invalid_assertion"


class InvalidToken(DomainError):
    """Session token missing, expired, or tampered."""

    code = "invalid_token"


class RateLimited(DomainError):
    """Per-user write rate limit exceeded."""

    code = "rate_limited"


# --- operator tooling ---------------------------------------------------

class ParseError(DomainError):
    """Seed or scenario file failed to parse."""

    code = "parse_error"


class ScriptError(DomainError):
    """Scenario action violated a precondition."""

    code = "script_error"


def all_domain_errors() -> list[type[DomainError]]:
    """Every concrete error class, for mapping-totality checks."""
    seen: list[type[DomainError]] = []
    stack: list[type[DomainError]] = [DomainError]
    while stack:
        cls = stack.pop()
        for sub in cls.__subclasses__():
            if sub not in seen:
                seen.append(sub)
                stack.append(sub)
    return sorted(seen, key=lambda c: c.__name__)
