// Hash-routed single page app. All state shown on screen comes from the HTTP
// API; this file only wires navigation and form events to ApiClient calls and
// re-renders from fresh server responses.

import { ApiClient, ApiError } from "./api";
import { pollUntil } from "./poll";
import {
  renderDirectory,
  renderErrorBanner,
  renderSearchResults,
  renderTermPage,
  renderTimeline,
} from "./render";
import { renderNegotiationThread, threadTurns } from "./thread";

const api = new ApiClient("");

function mount(): HTMLElement {
  const el = document.getElementById("app");
  if (!el) {
    throw new Error("missing #app mount point");
  }
  return el;
}

function showError(err: unknown): void {
  const message =
    err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  const banner = document.createElement("div");
  banner.innerHTML = renderErrorBanner(message);
  // prepend so whatever was on screen stays visible under the banner
  mount().prepend(banner);
  banner.querySelector(".retry")?.addEventListener("click", () => {
    banner.remove();
    route();
  });
}

async function showDirectory(): Promise<void> {
  const page = await api.listTerms();
  mount().innerHTML =
    '<form id="search-form"><input name="q" type="search" placeholder="Search terms" />' +
    '<button type="submit">Search</button></form>' +
    '<div id="results"></div>' +
    renderDirectory(page);
  document.getElementById("search-form")?.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    const q = (new FormData(ev.target as HTMLFormElement).get("q") as string) ?? "";
    try {
      const response = await api.search(q);
      const results = document.getElementById("results");
      if (results) {
        results.innerHTML = renderSearchResults(response);
      }
    } catch (err) {
      showError(err);
    }
  });
}

async function showTerm(termId: string): Promise<void> {
  const [detail, timeline] = await Promise.all([
    api.getTerm(termId),
    api.provenance(termId, "oldest_first"),
  ]);
  mount().innerHTML =
    renderTermPage(detail) +
    "<h2>Negotiation</h2>" +
    renderNegotiationThread(threadTurns(timeline.entries));
  wireTermControls(termId);
}

function wireTermControls(termId: string): void {
  const root = mount();
  root.querySelectorAll<HTMLButtonElement>("button[data-vote]").forEach((btn) => {
    btn.addEventListener("click", async () => {
      try {
        await api.setVote(btn.dataset.definition ?? "", Number(btn.dataset.vote) as 1 | -1);
        await showTerm(termId);
      } catch (err) {
        showError(err);
      }
    });
  });
  root.querySelector<HTMLButtonElement>("button.generate:not([disabled])")?.addEventListener(
    "click",
    async () => {
      try {
        await api.generate(termId);
        // generation runs server side; poll until an AI definition shows up
        await pollUntil(
          () => api.getTerm(termId),
          (d) => d.definitions.some((def) => def.kind === "ai"),
          { maxAttempts: 10 },
        );
        await showTerm(termId);
      } catch (err) {
        showError(err);
      }
    },
  );
  root.querySelector<HTMLButtonElement>("button.refine")?.addEventListener("click", async () => {
    try {
      await api.refine(termId);
      await showTerm(termId);
    } catch (err) {
      showError(err);
    }
  });
  root.querySelector<HTMLFormElement>("form.feedback-form")?.addEventListener(
    "submit",
    async (ev) => {
      ev.preventDefault();
      const form = ev.target as HTMLFormElement;
      const body = (new FormData(form).get("body") as string) ?? "";
      try {
        await api.addComment(form.dataset.definition ?? "", body, "feedback");
        await showTerm(termId);
      } catch (err) {
        showError(err);
      }
    },
  );
}

async function showProvenance(termId: string, order: "newest_first" | "oldest_first"): Promise<void> {
  const timeline = await api.provenance(termId, order);
  mount().innerHTML =
    `<p><a href="#/terms/${termId}">Back to term</a></p>` + renderTimeline(timeline);
  mount()
    .querySelector<HTMLButtonElement>("button.order-toggle")
    ?.addEventListener("click", (ev) => {
      const next = (ev.target as HTMLButtonElement).dataset.order as
        | "newest_first"
        | "oldest_first";
      void showProvenance(termId, next);
    });
}

async function route(): Promise<void> {
  const hash = window.location.hash || "#/";
  try {
    const provenance = hash.match(/^#\/terms\/([^/]+)\/provenance$/);
    const term = hash.match(/^#\/terms\/([^/]+)$/);
    if (provenance) {
      await showProvenance(provenance[1]!, "newest_first");
    } else if (term) {
      await showTerm(term[1]!);
    } else {
      await showDirectory();
    }
  } catch (err) {
    showError(err);
  }
}

window.addEventListener("hashchange", () => void route());
window.addEventListener("DOMContentLoaded", () => void route());
