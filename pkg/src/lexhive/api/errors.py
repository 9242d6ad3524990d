"""Total mapping from domain errors to HTTP responses.

Every ``DomainError`` code maps to exactly one status; a test walks the
error registry and fails if a subclass ever lands without a mapping here.
Response bodies always carry ``{"error": {"code", "message", "details"}}``.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from lexhive.core.errors import DomainError

STATUS_BY_CODE: dict[str, int] = {
    "domain_error": 500,
    # vocabulary rules
    "empty_label": 422,
    "duplicate_label": 409,
    "unknown_term": 404,
    "empty_body": 422,
    "empty_tag": 422,
    "ai_definition_exists": 409,
    "unknown_definition": 404,
    "not_authorized": 403,
    "invalid_value": 422,
    "unknown_user": 404,
    # provenance log
    "malformed_payload": 422,
    "clock_skew": 422,
    "corrupt_history": 500,
    # AI refinement
    "no_example": 422,
    "no_ai_definition": 409,
    "no_pending_feedback": 409,
    "backend_unavailable": 503,
    # storage
    "conflict_retry": 503,
    "storage_unavailable": 503,
    "schema_mismatch": 503,
    "migration_failure": 500,
    # auth and limits
    "invalid_assertion": 401,
    "invalid_token": 401,
    "rate_limited": 429,
    # operator tooling (reachable through config/seed handling)
    "parse_error": 422,
    "script_error": 422,
}


def error_body(code: str, message: str, details: dict | None = None) -> dict:
    return {"error": {"code": code, "message": message, "details": details or {}}}


def domain_error_response(exc: DomainError) -> JSONResponse:
    status = STATUS_BY_CODE[exc.code]
    details = {key: str(value) for key, value in exc.details.items()}
    return JSONResponse(status_code=status, content=error_body(exc.code, exc.message, details))


def register_error_handlers(app: FastAPI) -> None:
    @app.exception_handler(DomainError)
    async def _domain_error(request: Request, exc: DomainError) -> JSONResponse:
        return domain_error_response(exc)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(
        request: Request, exc: RequestValidationError
    ) -> JSONResponse:
        first = exc.errors()[0] if exc.errors() else {}
        location = ".".join(str(part) for part in first.get("loc", ()))
        message = first.get("msg", "request failed validation")
        return JSONResponse(
            status_code=422,
            content=error_body("validation_error", message, {"location": location}),
        )
