"""Prompt construction for AI definition drafting and revision.

Generation is example-initiated: a prompt cannot be built without at least
one usage example, because the example is what disambiguates the term's
context. The rendered prompt is a pure function of its inputs, and the
template is versioned so every generation event records which skeleton
produced its prompt.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from lexhive.core.errors import NoExample

TEMPLATE_VERSION = "1"

_ROLE_INSTRUCTION = (
    "You are a terminology assistant helping a research community agree on "
    "precise definitions."
)
_TASK_INSTRUCTION = (
    "Write one concise, self-contained definition of the term that fits the "
    "usage examples and addresses every feedback point. Reply with the "
    "definition text only."
)


@dataclass(frozen=True)
class PromptBundle:
    term_label: str
    human_definitions: tuple[str, ...]
    examples: tuple[str, ...]
    feedback_comments: tuple[str, ...]
    rendered: str


def _section(title: str, items: Sequence[str]) -> list[str]:
    lines = [title]
    if items:
        lines.extend(f"- {item}" for item in items)
    else:
        lines.append("- (none)")
    return lines


def build_prompt(
    term_label: str,
    human_definitions: Sequence[str],
    examples: Sequence[str],
    feedback: Sequence[str] = (),
) -> PromptBundle:
    """Assemble the prompt in fixed order: role, term, definitions, examples,
    feedback, task. Raises ``NoExample`` when no example is available."""
    if not examples:
        raise NoExample(f"term {term_label!r} has no example to seed generation")
    lines = [_ROLE_INSTRUCTION, f"Term: {term_label}"]
    lines += _section("Existing human definitions:", human_definitions)
    lines += _section("Usage examples:", examples)
    lines += _section("Reviewer feedback to incorporate:", feedback)
    lines.append(_TASK_INSTRUCTION)
    return PromptBundle(
        term_label=term_label,
        human_definitions=tuple(human_definitions),
        examples=tuple(examples),
        feedback_comments=tuple(feedback),
        rendered="\n".join(lines),
    )
