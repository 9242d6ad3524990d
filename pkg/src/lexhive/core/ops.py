"""Pure vocabulary rules: tally math and deterministic definition ranking."""

from __future__ import annotations

from typing import Iterable

from lexhive.core.models import Definition, TermState, Vote, VoteTally


def recompute_tally(votes: Iterable[Vote]) -> VoteTally:
    """Tally from the current vote rows (one row per user)."""
    rows = list(votes)
    up = sum(1 for v in rows if v.value == 1)
    down = sum(1 for v in rows if v.value == -1)
    return VoteTally(up=up, down=down)


def apply_vote_to_tally(tally: VoteTally, previous: int | None, value: int) -> VoteTally:
    """Incremental tally update for an upserted vote; re-casting replaces."""
    up, down = tally.up, tally.down
    if previous == 1:
        up -= 1
    elif previous == -1:
        down -= 1
    if value == 1:
        up += 1
    else:
        down += 1
    return VoteTally(up=up, down=down)


def rank_key(definition: Definition, tally: VoteTally) -> tuple:
    """Sort key: score descending, then earlier created_at, then id."""
    return (-tally.score, definition.created_at, definition.id)


def rank_definitions(state: TermState) -> list[tuple[Definition, VoteTally]]:
    """Deterministic consensus ordering of a term's definitions."""
    pairs = [(d, state.tally_for(d.id)) for d in state.definitions.values()]
    pairs.sort(key=lambda pair: rank_key(*pair))
    return pairs
