"""Runtime configuration and component wiring.

Settings load from a YAML file, environment variables (``LEXHIVE_*``), or
both; environment wins. Factories here are the single place that maps
configuration onto concrete store and backend instances.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from lexhive.core.errors import InvalidValue, ParseError
from lexhive.refine.backends import GenerationBackend, HttpChatBackend, MockBackend
from lexhive.store import SqliteStore

_ENV_PREFIX = "LEXHIVE_"

_AUTH_MODES = ("static", "oidc")
_BACKEND_KINDS = ("mock", "http")


@dataclass(frozen=True)
class AppConfig:
    database_url: str = "sqlite:///lexhive.db"
    session_secret: str = "dev-secret-change-me"
    session_ttl_seconds: int = 8 * 3600
    auth_mode: str = "static"
    oidc_issuer: str = ""
    oidc_client_id: str = ""
    backend_kind: str = "mock"
    backend_base_url: str = ""
    backend_model: str = ""
    acceptance_threshold: int = 2
    stall_window_days: int = 14
    rate_limit_writes: int = 60  # per window; 0 disables limiting
    rate_limit_window_seconds: int = 60
    bind_host: str = "127.0.0.1"
    bind_port: int = 8080

    def validate(self) -> "AppConfig":
        if self.auth_mode not in _AUTH_MODES:
            raise InvalidValue(f"auth_mode must be one of {_AUTH_MODES}")
        if self.backend_kind not in _BACKEND_KINDS:
            raise InvalidValue(f"backend_kind must be one of {_BACKEND_KINDS}")
        if self.auth_mode == "oidc" and not (self.oidc_issuer and self.oidc_client_id):
            raise InvalidValue("oidc auth requires oidc_issuer and oidc_client_id")
        if self.backend_kind == "http" and not (self.backend_base_url and self.backend_model):
            raise InvalidValue("http backend requires backend_base_url and backend_model")
        if self.acceptance_threshold < 1:
            raise InvalidValue("acceptance_threshold must be >= 1")
        if self.stall_window_days < 1:
            raise InvalidValue("stall_window_days must be >= 1")
        if self.session_ttl_seconds <= 0:
            raise InvalidValue("session_ttl_seconds must be positive")
        if self.rate_limit_writes < 0 or self.rate_limit_window_seconds <= 0:
            raise InvalidValue("rate limit settings must be non-negative / positive")
        return self


def _coerce(name: str, kind: type, raw: Any) -> Any:
    if kind is int:
        try:
            return int(raw)
        except (TypeError, ValueError) as exc:
            raise InvalidValue(f"setting {name} must be an integer, got {raw!r}") from exc
    return str(raw)


def load_config(
    path: str | Path | None = None, env: Mapping[str, str] = os.environ
) -> AppConfig:
    """File settings first, then environment overrides, then validation."""
    config = AppConfig()
    if path is not None:
        try:
            raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        except (OSError, yaml.YAMLError) as exc:
            raise ParseError(f"cannot read config {path}: {exc}") from exc
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ParseError(f"config {path} must be a mapping")
        known = {f.name: f.type for f in fields(AppConfig)}
        unknown = sorted(set(raw) - set(known))
        if unknown:
            raise ParseError(f"unknown config keys: {unknown}")
        config = replace(
            config,
            **{
                name: _coerce(name, type(getattr(config, name)), value)
                for name, value in raw.items()
            },
        )
    overrides: dict[str, Any] = {}
    for field in fields(AppConfig):
        env_name = _ENV_PREFIX + field.name.upper()
        if env_name in env:
            overrides[field.name] = _coerce(
                field.name, type(getattr(config, field.name)), env[env_name]
            )
    if overrides:
        config = replace(config, **overrides)
    return config.validate()


def build_store(config: AppConfig) -> SqliteStore:
    return SqliteStore(config.database_url)


def build_backend(config: AppConfig) -> GenerationBackend:
    if config.backend_kind == "http":
        return HttpChatBackend(config.backend_base_url, config.backend_model)
    return MockBackend()
