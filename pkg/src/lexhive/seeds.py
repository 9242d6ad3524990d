"""Seed-file loading: bootstrap terms directly through the engine.

Seed files are YAML lists of term entries; each may carry tags, human
definitions, and examples. Authors default to the operator actor ``seed``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import yaml

from lexhive.core.errors import ParseError
from lexhive.core.models import ActorKind, ActorRef
from lexhive.service import VocabService


def load_seed_file(path: str | Path) -> list[dict[str, Any]]:
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ParseError(f"cannot read seed file {path}: {exc}") from exc
    if not isinstance(raw, list):
        raise ParseError(f"seed file {path} must be a list of term entries")
    for position, entry in enumerate(raw):
        if not isinstance(entry, dict) or "label" not in entry:
            raise ParseError(f"seed entry {position} must be a mapping with a label")
    return raw


def _author(entry: dict[str, Any]) -> ActorRef:
    return ActorRef(kind=ActorKind.HUMAN, id=str(entry.get("author", "seed")))


def apply_seeds(service: VocabService, entries: list[dict[str, Any]]) -> dict[str, int]:
    """Create each term with its definitions and examples; returns counts."""
    counts = {"terms": 0, "definitions": 0, "examples": 0}
    for entry in entries:
        creator = ActorRef(kind=ActorKind.HUMAN, id=str(entry.get("created_by", "seed")))
        mutation = service.create_term(
            creator, str(entry["label"]), [str(t) for t in entry.get("tags", [])]
        )
        term_id = mutation.subject_id
        counts["terms"] += 1
        for definition in entry.get("definitions", []):
            service.add_definition(_author(definition), term_id, str(definition["body"]))
            counts["definitions"] += 1
        for example in entry.get("examples", []):
            service.add_example(_author(example), term_id, str(example["body"]))
            counts["examples"] += 1
    return counts
