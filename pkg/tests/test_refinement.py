"""Prompt assembly and generation backends, including the retry split:
transport errors retry, recorded failures never do."""

import httpx
import pytest

from lexhive.core.errors import BackendUnavailable, NoExample
from lexhive.refine.backends import (
    GenerationResult,
    HttpChatBackend,
    MockBackend,
    Outcome,
    call_with_retries,
)
from lexhive.refine.prompt import TEMPLATE_VERSION, build_prompt


# -- prompt --------------------------------------------------------------


def test_prompt_requires_an_example():
    with pytest.raises(NoExample):
        build_prompt("widget", ["a part"], [])


def test_prompt_sections_in_fixed_order():
    bundle = build_prompt(
        "widget",
        ["a part", "a gadget"],
        ["fit the widget"],
        ["too vague"],
    )
    text = bundle.rendered
    assert "Term: widget" in text
    positions = [
        text.index("Term: widget"),
        text.index("Existing human definitions:"),
        text.index("- a part"),
        text.index("Usage examples:"),
        text.index("- fit the widget"),
        text.index("Reviewer feedback to incorporate:"),
        text.index("- too vague"),
    ]
    assert positions == sorted(positions)


def test_prompt_is_pure():
    a = build_prompt("widget", ["a part"], ["use it"], ["fix it"])
    b = build_prompt("widget", ["a part"], ["use it"], ["fix it"])
    assert a == b


def test_prompt_marks_empty_sections():
    bundle = build_prompt("widget", [], ["use it"])
    assert "Existing human definitions:\n- (none)" in bundle.rendered


def test_template_version_is_recorded_constant():
    assert TEMPLATE_VERSION == "1"


# -- mock backend --------------------------------------------------------


def test_mock_backend_is_deterministic():
    backend = MockBackend()
    prompt = build_prompt("widget", [], ["use it"]).rendered
    assert backend.generate(prompt) == backend.generate(prompt)


def test_mock_backend_varies_with_prompt():
    backend = MockBackend()
    first = backend.generate(build_prompt("widget", [], ["use it"]).rendered)
    second = backend.generate(
        build_prompt("widget", [], ["use it"], ["tighten wording"]).rendered
    )
    assert first.body != second.body  # feedback changes the prompt, so the draft


def test_mock_backend_scheduled_failure():
    backend = MockBackend(fail_labels=["widget"])
    result = backend.generate(build_prompt("widget", [], ["use it"]).rendered)
    assert result.outcome is Outcome.FAILURE
    assert result.body is None
    assert "widget" in result.failure_reason


def test_result_invariant_body_iff_success():
    with pytest.raises(ValueError):
        GenerationResult(outcome=Outcome.SUCCESS, backend_id="x", latency_ms=0)
    with pytest.raises(ValueError):
        GenerationResult(
            outcome=Outcome.FAILURE, backend_id="x", latency_ms=0, body="?", failure_reason="r"
        )


# -- retry policy --------------------------------------------------------


class FlakyBackend:
    id = "flaky"

    def __init__(self, failures_before_success: int):
        self.remaining = failures_before_success
        self.calls = 0

    def generate(self, prompt, params=None):
        self.calls += 1
        if self.remaining > 0:
            self.remaining -= 1
            raise BackendUnavailable("transient outage")
        return GenerationResult(
            outcome=Outcome.SUCCESS, backend_id=self.id, latency_ms=0, body="ok"
        )


def test_transport_failures_are_retried_with_backoff():
    backend = FlakyBackend(failures_before_success=2)
    delays: list[float] = []
    result = call_with_retries(backend, "p", attempts=3, sleep=delays.append)
    assert result.body == "ok"
    assert backend.calls == 3
    assert delays == [0.2, 0.4]


def test_retries_exhaust_to_backend_unavailable():
    backend = FlakyBackend(failures_before_success=99)
    with pytest.raises(BackendUnavailable):
        call_with_retries(backend, "p", attempts=3, sleep=lambda _: None)
    assert backend.calls == 3


def test_recorded_failure_is_never_retried():
    backend = MockBackend(fail_labels=["widget"])
    calls = {"n": 0}
    original = backend.generate

    def counting(prompt, params=None):
        calls["n"] += 1
        return original(prompt, params)

    backend.generate = counting
    prompt = build_prompt("widget", [], ["use it"]).rendered
    result = call_with_retries(backend, prompt, attempts=3, sleep=lambda _: None)
    assert result.outcome is Outcome.FAILURE
    assert calls["n"] == 1


# -- http backend --------------------------------------------------------


def _http_backend(handler) -> HttpChatBackend:
    client = httpx.Client(transport=httpx.MockTransport(handler))
    return HttpChatBackend("http://model.test", "tiny", client=client)


def test_http_backend_success():
    def handler(request: httpx.Request) -> httpx.Response:
        assert request.url.path == "/v1/chat/completions"
        return httpx.Response(
            200,
            json={"choices": [{"message": {"content": "  a definition  "}}]},
        )

    result = _http_backend(handler).generate("p")
    assert result.outcome is Outcome.SUCCESS
    assert result.body == "a definition"
    assert result.backend_id == "http:tiny"


def test_http_backend_5xx_is_transport_failure():
    backend = _http_backend(lambda request: httpx.Response(503))
    with pytest.raises(BackendUnavailable):
        backend.generate("p")


def test_http_backend_4xx_is_recorded_failure():
    backend = _http_backend(lambda request: httpx.Response(429))
    result = backend.generate("p")
    assert result.outcome is Outcome.FAILURE
    assert "429" in result.failure_reason


def test_http_backend_malformed_body_is_transport_failure():
    backend = _http_backend(lambda request: httpx.Response(200, json={"weird": True}))
    with pytest.raises(BackendUnavailable):
        backend.generate("p")


def test_http_backend_empty_text_is_recorded_failure():
    backend = _http_backend(
        lambda request: httpx.Response(
            200, json={"choices": [{"message": {"content": "   "}}]}
        )
    )
    result = backend.generate("p")
    assert result.outcome is Outcome.FAILURE


def test_http_backend_network_error_is_transport_failure():
    def handler(request: httpx.Request) -> httpx.Response:
        raise httpx.ConnectError("refused")

    with pytest.raises(BackendUnavailable):
        _http_backend(handler).generate("p")
