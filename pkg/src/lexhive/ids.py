"""Identifier factories.

Identifiers are opaque and stable once assigned. Production uses random ids;
scripted scenarios use sequential ids so whole runs are byte-reproducible.
"""

from __future__ import annotations

import uuid
from collections import defaultdict
from typing import Protocol


class IdFactory(Protocol):
    def new_id(self, prefix: str) -> str: ...


class RandomIdFactory:
    def new_id(self, prefix: str) -> str:
        return f"{prefix}-{uuid.uuid4().hex[:12]}"


class SequentialIdFactory:
    """Deterministic per-prefix counters, e.g. t-0001, d-0001, d-0002."""

    def __init__(self) -> None:
        self._counters: defaultdict[str, int] = defaultdict(int)

    def new_id(self, prefix: str) -> str:
        self._counters[prefix] += 1
        return f"{prefix}-{self._counters[prefix]:04d}"
