// Pure HTML-string renderers. Every view is a function of server data; no
// rank, tally, version, or phase is computed here. Interaction wiring lives
// in app.ts.

import type {
  ActorKind,
  DefinitionOut,
  DirectoryPage,
  SearchResponse,
  TermDetail,
  TimelineResponse,
} from "./types";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

// Badge text and class derive only from the actor kind. The two classes map
// to a colorblind-safe pair in the stylesheet (blue human, orange AI).
export function actorBadge(kind: ActorKind): string {
  return kind === "ai"
    ? '<span class="badge badge-ai">AI</span>'
    : '<span class="badge badge-human">Human</span>';
}

const PHASE_LABELS: Record<string, string> = {
  no_ai_definition: "no AI definition yet",
  ai_proposed: "AI draft proposed",
  feedback_pending: "feedback awaiting revision",
  converged: "converged",
  stalled: "stalled",
};

export function phaseChip(phase: string): string {
  const label = PHASE_LABELS[phase] ?? phase;
  return `<span class="phase phase-${escapeHtml(phase)}">${escapeHtml(label)}</span>`;
}

// -- directory and search ------------------------------------------------

export function renderDirectory(page: DirectoryPage): string {
  if (page.total === 0) {
    return (
      '<div class="empty-state"><p>No terms yet.</p>' +
      '<p><a href="#/new" class="cta">Add the first term</a></p></div>'
    );
  }
  const rows = page.terms
    .map(
      (entry) =>
        "<tr>" +
        `<td><a href="#/terms/${escapeHtml(entry.id)}">${escapeHtml(entry.label)}</a></td>` +
        `<td>${entry.tags.map((t) => `<span class="tag">${escapeHtml(t)}</span>`).join(" ")}</td>` +
        `<td class="num">${entry.definition_count}</td>` +
        `<td class="num">${entry.example_count}</td>` +
        `<td>${phaseChip(entry.phase)}</td>` +
        "</tr>",
    )
    .join("\n");
  return (
    '<table class="directory">' +
    "<thead><tr><th>Term</th><th>Tags</th><th>Definitions</th><th>Examples</th><th>Status</th></tr></thead>" +
    `<tbody>\n${rows}\n</tbody></table>` +
    `<p class="count">${page.total} terms</p>`
  );
}

export function renderSearchResults(response: SearchResponse): string {
  if (!response.query.trim()) {
    return '<p class="hint">Type a label, tag, or phrase to search the vocabulary.</p>';
  }
  if (response.hits.length === 0) {
    return `<p class="empty-state">No matches for "${escapeHtml(response.query)}".</p>`;
  }
  const items = response.hits
    .map(
      (hit) =>
        `<li class="hit hit-${hit.matched}">` +
        `<a href="#/terms/${escapeHtml(hit.term_id)}">${escapeHtml(hit.label)}</a>` +
        ` <span class="matched">matched ${hit.matched}</span>` +
        (hit.excerpt ? `<p class="excerpt">${escapeHtml(hit.excerpt)}</p>` : "") +
        "</li>",
    )
    .join("\n");
  return `<ul class="search-results">\n${items}\n</ul>`;
}

// -- term page -----------------------------------------------------------

function renderComment(comment: DefinitionOut["comments"][number]): string {
  return (
    `<li class="comment comment-${comment.disposition}">` +
    `${actorBadge(comment.author.kind)} ` +
    `<span class="body">${escapeHtml(comment.body)}</span>` +
    ` <time>${escapeHtml(comment.created_at)}</time>` +
    "</li>"
  );
}

export function renderDefinitionCard(definition: DefinitionOut): string {
  const comments = definition.comments.length
    ? `<ul class="comments">\n${definition.comments.map(renderComment).join("\n")}\n</ul>`
    : "";
  return (
    `<article class="definition definition-${definition.kind}" data-id="${escapeHtml(definition.id)}">` +
    `<header>${actorBadge(definition.kind)} <span class="version">v${definition.version}</span>` +
    ` <span class="tally" data-score="${definition.tally.score}">` +
    `+${definition.tally.up} / -${definition.tally.down}</span>` +
    `<span class="vote-controls">` +
    `<button data-vote="1" data-definition="${escapeHtml(definition.id)}">&#9650;</button>` +
    `<button data-vote="-1" data-definition="${escapeHtml(definition.id)}">&#9660;</button>` +
    `</span></header>` +
    `<p class="body">${escapeHtml(definition.body)}</p>` +
    comments +
    "</article>"
  );
}

export function canGenerate(detail: TermDetail): boolean {
  const hasAi = detail.definitions.some((d) => d.kind === "ai");
  return !hasAi && detail.examples.length > 0;
}

function generationControls(detail: TermDetail): string {
  const hasAi = detail.definitions.some((d) => d.kind === "ai");
  if (!hasAi) {
    if (detail.examples.length === 0) {
      return (
        '<button class="generate" disabled>Generate AI definition</button>' +
        '<p class="hint">Add a usage example first; generation starts from examples.</p>'
      );
    }
    return '<button class="generate" data-term="' + escapeHtml(detail.term.id) + '">Generate AI definition</button>';
  }
  const revision =
    detail.negotiation.phase === "feedback_pending"
      ? `<button class="refine" data-term="${escapeHtml(detail.term.id)}">Request revision</button>`
      : "";
  return (
    revision +
    '<form class="feedback-form" data-definition="' +
    escapeHtml(detail.definitions.find((d) => d.kind === "ai")?.id ?? "") +
    '"><textarea name="body" placeholder="Feedback for the AI draft"></textarea>' +
    "<button type=\"submit\">Send feedback</button></form>"
  );
}

export function renderTermPage(detail: TermDetail): string {
  const term = detail.term;
  const tags = term.tags.map((t) => `<span class="tag">${escapeHtml(t)}</span>`).join(" ");
  const cards = detail.definitions.map(renderDefinitionCard).join("\n");
  const examples = detail.examples.length
    ? `<ul class="examples">\n${detail.examples
        .map((e) => `<li>${escapeHtml(e.body)}</li>`)
        .join("\n")}\n</ul>`
    : '<p class="hint">No usage examples yet.</p>';
  return (
    `<section class="term" data-id="${escapeHtml(term.id)}">` +
    `<h1>${escapeHtml(term.label)}</h1>` +
    `<div class="meta">${tags} ${phaseChip(detail.negotiation.phase)}</div>` +
    `<div class="definitions">\n${cards}\n</div>` +
    `<h2>Examples</h2>${examples}` +
    `<div class="controls">${generationControls(detail)}</div>` +
    `<p><a href="#/terms/${escapeHtml(term.id)}/provenance">Full history</a></p>` +
    "</section>"
  );
}

// -- provenance timeline -------------------------------------------------

export function renderTimeline(response: TimelineResponse): string {
  const other = response.order === "oldest_first" ? "newest_first" : "oldest_first";
  const items = response.entries
    .map((entry) => {
      const summary =
        entry.actor_kind === "ai"
          ? `<strong>${escapeHtml(entry.summary)}</strong>`
          : escapeHtml(entry.summary);
      return (
        `<li class="event event-${entry.actor_kind}" data-seq="${entry.seq}">` +
        `${actorBadge(entry.actor_kind)} ${summary}` +
        (entry.payload_excerpt
          ? ` <span class="excerpt">${escapeHtml(entry.payload_excerpt)}</span>`
          : "") +
        ` <time>${escapeHtml(entry.occurred_at)}</time></li>`
      );
    })
    .join("\n");
  return (
    `<div class="timeline" data-order="${response.order}">` +
    `<button class="order-toggle" data-order="${other}">Show ${other.replace("_", " ")}</button>` +
    `<ol>\n${items}\n</ol></div>`
  );
}

export function renderErrorBanner(message: string): string {
  return (
    `<div class="banner banner-error" role="alert">${escapeHtml(message)} ` +
    '<button class="retry">Retry</button></div>'
  );
}
