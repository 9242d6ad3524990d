"""Negotiation state machine for the human/AI refinement loop.

The phase graph is closed: every legal phase change appears in
``ALLOWED_TRANSITIONS``, and property tests walk event sequences to confirm
nothing else is reachable. Converged and stalled terms reopen on new
feedback.
"""

from __future__ import annotations

from datetime import timedelta

from lexhive.core.errors import NoAIDefinition
from lexhive.core.models import Phase

DEFAULT_ACCEPTANCE_THRESHOLD = 2
DEFAULT_STALL_WINDOW = timedelta(days=14)

ALLOWED_TRANSITIONS: frozenset[tuple[Phase, Phase]] = frozenset(
    {
        (Phase.NO_AI_DEFINITION, Phase.AI_PROPOSED),
        (Phase.AI_PROPOSED, Phase.FEEDBACK_PENDING),
        (Phase.FEEDBACK_PENDING, Phase.AI_PROPOSED),
        (Phase.AI_PROPOSED, Phase.CONVERGED),
        (Phase.AI_PROPOSED, Phase.STALLED),
        (Phase.CONVERGED, Phase.FEEDBACK_PENDING),
        (Phase.STALLED, Phase.FEEDBACK_PENDING),
    }
)


def phase_after_feedback(phase: Phase) -> Phase:
    """New phase once a feedback comment lands on the AI definition."""
    if phase is Phase.NO_AI_DEFINITION:
        raise NoAIDefinition("feedback requires an AI definition")
    return Phase.FEEDBACK_PENDING


def phase_after_refinement(phase: Phase, success: bool) -> Phase:
    """Refinement consumes the queue on success; failures keep it pending."""
    assert phase is Phase.FEEDBACK_PENDING
    return Phase.AI_PROPOSED if success else Phase.FEEDBACK_PENDING


def evaluate_phase(
    phase: Phase,
    *,
    score: int,
    pending: int,
    idle: timedelta,
    threshold: int = DEFAULT_ACCEPTANCE_THRESHOLD,
    stall_window: timedelta = DEFAULT_STALL_WINDOW,
) -> Phase:
    """Convergence/stall evaluation; only a quiet proposal can move.

    Converged wins over stalled when both conditions hold.
    """
    if phase is not Phase.AI_PROPOSED or pending:
        return phase
    if score >= threshold:
        return Phase.CONVERGED
    if idle > stall_window:
        return Phase.STALLED
    return phase
