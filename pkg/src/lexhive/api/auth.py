"""Session tokens and pluggable identity verification.

Login exchanges an identity assertion for a short-lived HMAC-signed session
token. Two providers ship: a shared-secret static provider for test and
scripted use, and an OpenID Connect provider that verifies RS256 id_tokens
against the issuer's published JWKS.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Mapping, Protocol

import httpx
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric import padding, rsa
from cryptography.exceptions import InvalidSignature

from lexhive.core.errors import InvalidAssertion, InvalidToken


@dataclass(frozen=True)
class Identity:
    subject: str
    display_name: str


def _b64url_encode(raw: bytes) -> str:
    return base64.urlsafe_b64encode(raw).rstrip(b"=").decode("ascii")


def _b64url_decode(text: str) -> bytes:
    padding_needed = (-len(text)) % 4
    return base64.urlsafe_b64decode(text + "=" * padding_needed)


# -- session tokens ------------------------------------------------------


def _sign(secret: str, payload_b64: str) -> str:
    return hmac.new(secret.encode("utf-8"), payload_b64.encode("ascii"), hashlib.sha256).hexdigest()


def issue_token(secret: str, user_id: str, *, now: datetime, ttl_seconds: int) -> str:
    issued = int(now.timestamp())
    payload = {"sub": user_id, "iat": issued, "exp": issued + ttl_seconds}
    payload_b64 = _b64url_encode(json.dumps(payload, separators=(",", ":")).encode("utf-8"))
    return f"{payload_b64}.{_sign(secret, payload_b64)}"


def verify_token(secret: str, token: str, *, now: datetime) -> str:
    """Return the user id carried by a valid, unexpired token."""
    try:
        payload_b64, signature = token.split(".")
    except ValueError as exc:
        raise InvalidToken("malformed session token") from exc
    if not hmac.compare_digest(signature, _sign(secret, payload_b64)):
        raise InvalidToken("session token signature mismatch")
    try:
        payload = json.loads(_b64url_decode(payload_b64))
        subject = payload["sub"]
        expires = int(payload["exp"])
    except (ValueError, KeyError, TypeError) as exc:
        raise InvalidToken("malformed session token payload") from exc
    if int(now.timestamp()) >= expires:
        raise InvalidToken("session token expired")
    return subject


# -- identity providers --------------------------------------------------


class IdentityProvider(Protocol):
    def verify(self, assertion: Mapping[str, Any]) -> Identity: ...


class StaticIdentityProvider:
    """Shared-secret assertions: sign(subject + newline + display name)."""

    def __init__(self, secret: str):
        self._secret = secret

    def _signature(self, subject: str, display_name: str) -> str:
        message = f"{subject}\n{display_name}".encode("utf-8")
        return hmac.new(self._secret.encode("utf-8"), message, hashlib.sha256).hexdigest()

    def assertion_for(self, subject: str, display_name: str) -> dict[str, str]:
        """Client-side helper; scripted runs build their logins with this."""
        return {
            "subject": subject,
            "display_name": display_name,
            "signature": self._signature(subject, display_name),
        }

    def verify(self, assertion: Mapping[str, Any]) -> Identity:
        try:
            subject = assertion["subject"]
            display_name = assertion["display_name"]
            signature = assertion["signature"]
        except (KeyError, TypeError) as exc:
            raise InvalidAssertion("assertion missing subject/display_name/signature") from exc
        if not isinstance(subject, str) or not subject.strip():
            raise InvalidAssertion("assertion subject must be a non-empty string")
        if not hmac.compare_digest(str(signature), self._signature(subject, display_name)):
            raise InvalidAssertion("assertion signature mismatch")
        return Identity(subject=subject, display_name=str(display_name))


class OidcIdentityProvider:
    """Verifies OpenID Connect id_tokens (RS256) from one issuer.

    Discovery and JWKS documents are fetched lazily and cached; an unknown
    key id triggers exactly one refetch to pick up rotated keys.
    """

    def __init__(
        self,
        issuer: str,
        client_id: str,
        *,
        client: httpx.Client | None = None,
        now: Any = None,
    ):
        self.issuer = issuer.rstrip("/")
        self.client_id = client_id
        self._client = client or httpx.Client(timeout=10.0)
        self._now = now or (lambda: datetime.now(timezone.utc))
        self._keys: dict[str, rsa.RSAPublicKey] | None = None

    def _fetch_keys(self) -> dict[str, rsa.RSAPublicKey]:
        try:
            discovery = self._client.get(
                f"{self.issuer}/.well-known/openid-configuration"
            )
            discovery.raise_for_status()
            jwks_uri = discovery.json()["jwks_uri"]
            jwks = self._client.get(jwks_uri)
            jwks.raise_for_status()
            raw_keys = jwks.json()["keys"]
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise InvalidAssertion(f"cannot fetch issuer keys: {exc}") from exc
        keys: dict[str, rsa.RSAPublicKey] = {}
        for raw in raw_keys:
            if raw.get("kty") != "RSA" or "kid" not in raw:
                continue
            try:
                n = int.from_bytes(_b64url_decode(raw["n"]), "big")
                e = int.from_bytes(_b64url_decode(raw["e"]), "big")
            except (KeyError, ValueError):
                continue
            keys[raw["kid"]] = rsa.RSAPublicNumbers(e, n).public_key()
        return keys

    def _key_for(self, kid: str) -> rsa.RSAPublicKey:
        if self._keys is None or kid not in self._keys:
            self._keys = self._fetch_keys()
        if kid not in self._keys:
            raise InvalidAssertion(f"issuer does not publish key {kid!r}")
        return self._keys[kid]

    def verify(self, assertion: Mapping[str, Any]) -> Identity:
        token = assertion.get("id_token")
        if not isinstance(token, str) or token.count(".") != 2:
            raise InvalidAssertion("assertion must carry an id_token")
        header_b64, claims_b64, signature_b64 = token.split(".")
        try:
            header = json.loads(_b64url_decode(header_b64))
            claims = json.loads(_b64url_decode(claims_b64))
            signature = _b64url_decode(signature_b64)
        except (ValueError, TypeError) as exc:
            raise InvalidAssertion("id_token is not valid JWT") from exc
        if header.get("alg") != "RS256":
            raise InvalidAssertion(f"unsupported id_token alg {header.get('alg')!r}")
        key = self._key_for(str(header.get("kid")))
        signing_input = f"{header_b64}.{claims_b64}".encode("ascii")
        try:
            key.verify(signature, signing_input, padding.PKCS1v15(), hashes.SHA256())
        except InvalidSignature as exc:
            raise InvalidAssertion("id_token signature mismatch") from exc
        if claims.get("iss", "").rstrip("/") != self.issuer:
            raise InvalidAssertion("id_token issuer mismatch")
        audience = claims.get("aud")
        audiences = audience if isinstance(audience, list) else [audience]
        if self.client_id not in audiences:
            raise InvalidAssertion("id_token audience mismatch")
        try:
            expires = int(claims["exp"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidAssertion("id_token missing exp") from exc
        if int(self._now().timestamp()) >= expires:
            raise InvalidAssertion("id_token expired")
        subject = claims.get("sub")
        if not subject:
            raise InvalidAssertion("id_token missing sub")
        display_name = claims.get("name") or claims.get("email") or subject
        return Identity(subject=str(subject), display_name=str(display_name))
