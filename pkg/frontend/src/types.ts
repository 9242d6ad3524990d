// Wire types for the vocabulary service API. These mirror the server's JSON
// exactly; the client renders server values and never re-derives ranks,
// tallies, versions, or phases locally.

export type ActorKind = "human" | "ai";

export type Phase =
  | "no_ai_definition"
  | "ai_proposed"
  | "feedback_pending"
  | "converged"
  | "stalled";

export interface ActorRef {
  kind: ActorKind;
  id: string;
}

export interface Tally {
  up: number;
  down: number;
  score: number;
}

export interface UserOut {
  id: string;
  display_name: string;
  role: string;
}

export interface CommentOut {
  id: string;
  definition_id: string;
  author: ActorRef;
  body: string;
  disposition: "discussion" | "feedback";
  created_at: string;
}

export interface DefinitionOut {
  id: string;
  body: string;
  author: ActorRef;
  kind: ActorKind;
  version: number;
  created_at: string;
  updated_at: string;
  tally: Tally;
  comments: CommentOut[];
}

export interface ExampleOut {
  id: string;
  body: string;
  author: ActorRef;
  created_at: string;
}

export interface NegotiationInfo {
  phase: Phase;
  pending_feedback: string[];
  last_activity: string | null;
}

export interface TermHeader {
  id: string;
  label: string;
  tags: string[];
  status: string;
  created_by: ActorRef;
  created_at: string;
}

// GET /terms/{id}; definitions arrive ranked by the server.
export interface TermDetail {
  term: TermHeader;
  definitions: DefinitionOut[];
  examples: ExampleOut[];
  negotiation: NegotiationInfo;
  version: number;
}

export interface DirectoryEntry {
  id: string;
  label: string;
  tags: string[];
  definition_count: number;
  example_count: number;
  phase: Phase;
  created_at: string;
}

export interface DirectoryPage {
  page: number;
  page_size: number;
  total: number;
  terms: DirectoryEntry[];
}

export interface SearchHit {
  term_id: string;
  label: string;
  matched: "label" | "tag" | "definition";
  excerpt: string;
  tags: string[];
}

export interface SearchResponse {
  query: string;
  hits: SearchHit[];
}

export interface TimelineEntry {
  seq: number;
  occurred_at: string;
  actor_kind: ActorKind;
  action: string;
  summary: string;
  payload_excerpt: string;
}

export interface TimelineResponse {
  term_id: string;
  order: "oldest_first" | "newest_first";
  entries: TimelineEntry[];
}

export interface LoginResponse {
  token: string;
  user: UserOut;
}

// 202 body for generation and refinement requests.
export interface GenerationResponse {
  generation_id: string;
  outcome: "success" | "failure";
  definition_id: string | null;
  failure_reason: string | null;
  provenance_seq: number | null;
  negotiation: { phase: Phase; pending_feedback: string[] };
}
