"""Pluggable text-generation backends.

Two failure modes are deliberately distinct:

* a *recorded* generation failure (the backend answered, but produced no
  usable text) comes back as a ``GenerationResult`` with outcome ``failure``
  and is logged to provenance as a failed generation, never retried;
* a *transport* failure (backend unreachable, 5xx, malformed response)
  raises ``BackendUnavailable`` and is retried with exponential backoff by
  the caller.

The mock backend is fully deterministic: identical prompt, identical result.
"""

from __future__ import annotations

import hashlib
import re
import time
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Protocol

import httpx

from lexhive.core.errors import BackendUnavailable


class Outcome(str, Enum):
    SUCCESS = "success"
    FAILURE = "failure"


@dataclass(frozen=True)
class GenerationParams:
    max_tokens: int = 256
    temperature: float = 0.2


@dataclass(frozen=True)
class GenerationResult:
    outcome: Outcome
    backend_id: str
    latency_ms: int
    body: str | None = None
    failure_reason: str | None = None

    def __post_init__(self) -> None:
        if (self.outcome is Outcome.SUCCESS) != (self.body is not None):
            raise ValueError("body present iff outcome is success")
        if (self.outcome is Outcome.FAILURE) != (self.failure_reason is not None):
            raise ValueError("failure_reason present iff outcome is failure")


class GenerationBackend(Protocol):
    id: str

    def generate(
        self, prompt: str, params: GenerationParams | None = None
    ) -> GenerationResult: ...


_TERM_LINE = re.compile(r"^Term: (.+)$", re.MULTILINE)


class MockBackend:
    """Offline deterministic backend for tests and scripted scenarios.

    The draft body is a fixed preamble plus a content hash of the prompt, so
    revised prompts (which embed feedback) yield visibly different drafts.
    A failure schedule keyed by term label makes behavioral failure counts
    scriptable.
    """

    def __init__(self, fail_labels: Iterable[str] = (), backend_id: str = "mock"):
        self.id = backend_id
        self.fail_labels = set(fail_labels)

    def generate(
        self, prompt: str, params: GenerationParams | None = None
    ) -> GenerationResult:
        match = _TERM_LINE.search(prompt)
        label = match.group(1) if match else ""
        if label in self.fail_labels:
            return GenerationResult(
                outcome=Outcome.FAILURE,
                backend_id=self.id,
                latency_ms=0,
                failure_reason=f"scheduled generation failure for term {label!r}",
            )
        digest = hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:12]
        body = (
            f"Machine-drafted definition [{digest}]: a working definition of "
            f"\"{label}\" synthesized from the supplied examples and feedback."
        )
        return GenerationResult(
            outcome=Outcome.SUCCESS, backend_id=self.id, latency_ms=0, body=body
        )


class HttpChatBackend:
    """Adapter for chat-completion style HTTP model servers.

    Endpoint and model name come from configuration; any server speaking the
    common ``/v1/chat/completions`` request shape works.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        *,
        client: httpx.Client | None = None,
        timeout: float = 60.0,
    ):
        self.id = f"http:{model}"
        self.base_url = base_url.rstrip("/")
        self.model = model
        self._client = client or httpx.Client(timeout=timeout)

    def generate(
        self, prompt: str, params: GenerationParams | None = None
    ) -> GenerationResult:
        params = params or GenerationParams()
        started = time.monotonic()
        try:
            response = self._client.post(
                f"{self.base_url}/v1/chat/completions",
                json={
                    "model": self.model,
                    "messages": [{"role": "user", "content": prompt}],
                    "max_tokens": params.max_tokens,
                    "temperature": params.temperature,
                },
            )
        except httpx.HTTPError as exc:
            raise BackendUnavailable(f"backend request failed: {exc}") from exc
        latency_ms = int((time.monotonic() - started) * 1000)
        if response.status_code >= 500:
            raise BackendUnavailable(f"backend returned {response.status_code}")
        if response.status_code >= 400:
            return GenerationResult(
                outcome=Outcome.FAILURE,
                backend_id=self.id,
                latency_ms=latency_ms,
                failure_reason=f"backend rejected request ({response.status_code})",
            )
        try:
            body = response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise BackendUnavailable(f"malformed backend response: {exc}") from exc
        text = (body or "").strip()
        if not text:
            return GenerationResult(
                outcome=Outcome.FAILURE,
                backend_id=self.id,
                latency_ms=latency_ms,
                failure_reason="backend returned empty text",
            )
        return GenerationResult(
            outcome=Outcome.SUCCESS, backend_id=self.id, latency_ms=latency_ms, body=text
        )


def call_with_retries(
    backend: GenerationBackend,
    prompt: str,
    *,
    params: GenerationParams | None = None,
    attempts: int = 3,
    base_delay: float = 0.2,
    sleep=time.sleep,
) -> GenerationResult:
    """Invoke a backend, retrying transport failures with exponential backoff.

    Recorded generation failures pass straight through: they are behavior,
    not infrastructure noise.
    """
    last: BackendUnavailable | None = None
    for attempt in range(attempts):
        try:
            return backend.generate(prompt, params)
        except BackendUnavailable as exc:
            last = exc
            if attempt < attempts - 1:
                sleep(base_delay * (2**attempt))
    assert last is not None
    raise last
