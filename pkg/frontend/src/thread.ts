// The negotiation thread is a conversational view of a term's history:
// definition drafts, revisions, and comments, oldest first, each attributed
// to the human or AI actor the server recorded.

import { actorBadge, escapeHtml } from "./render";
import type { ActorKind, TimelineEntry } from "./types";

export interface ThreadTurn {
  badge: ActorKind;
  at: string;
  action: string;
  text: string;
}

// Only conversational events become turns; votes, tags, and phase changes
// stay out of the thread and live in the full timeline instead.
const THREAD_ACTIONS = new Set([
  "definition_added",
  "definition_revised",
  "comment_added",
  "ai_generation_failed",
]);

export function threadTurns(entries: TimelineEntry[]): ThreadTurn[] {
  return [...entries]
    .sort((a, b) => a.seq - b.seq)
    .filter((entry) => THREAD_ACTIONS.has(entry.action))
    .map((entry) => ({
      badge: entry.actor_kind,
      at: entry.occurred_at,
      action: entry.action,
      text: entry.payload_excerpt || entry.summary,
    }));
}

export function renderNegotiationThread(turns: ThreadTurn[]): string {
  if (turns.length === 0) {
    return '<p class="hint">No discussion yet.</p>';
  }
  const items = turns
    .map(
      (turn) =>
        `<li class="turn turn-${turn.badge}">` +
        `${actorBadge(turn.badge)}` +
        `<div class="bubble"><p>${escapeHtml(turn.text)}</p>` +
        `<time>${escapeHtml(turn.at)}</time></div></li>`,
    )
    .join("\n");
  return `<ol class="thread">\n${items}\n</ol>`;
}
