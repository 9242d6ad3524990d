import type {
  DirectoryPage,
  GenerationResponse,
  LoginResponse,
  SearchResponse,
  TermDetail,
  TimelineResponse,
} from "./types";

// Error envelope every non-2xx response carries: {"error": {code, message, details}}.
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly details: Record<string, string> = {},
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface ApiClientOptions {
  fetchImpl?: typeof fetch;
  token?: string | null;
}

export class ApiClient {
  token: string | null;
  private readonly fetchImpl: typeof fetch;
  // one in-flight request per read path, so a busy view cannot stampede
  private readonly inflight = new Map<string, Promise<unknown>>();

  constructor(readonly baseUrl: string, options: ApiClientOptions = {}) {
    this.fetchImpl = options.fetchImpl ?? globalThis.fetch.bind(globalThis);
    this.token = options.token ?? null;
  }

  private async send<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let status = response.status;
      let code = "unknown_error";
      let message = `request failed with status ${status}`;
      let details: Record<string, string> = {};
      try {
        const parsed = await response.json();
        if (parsed && parsed.error) {
          code = parsed.error.code ?? code;
          message = parsed.error.message ?? message;
          details = parsed.error.details ?? {};
        }
      } catch {
        // non-JSON body (proxy error page); keep the fallback message
      }
      throw new ApiError(status, code, message, details);
    }
    return response.json() as Promise<T>;
  }

  private get<T>(path: string): Promise<T> {
    const pending = this.inflight.get(path);
    if (pending) return pending as Promise<T>;
    const request = this.send<T>("GET", path).finally(() => {
      this.inflight.delete(path);
    });
    this.inflight.set(path, request);
    return request;
  }

  async login(assertion: Record<string, unknown>): Promise<LoginResponse> {
    const result = await this.send<LoginResponse>("POST", "/auth/login", { assertion });
    this.token = result.token;
    return result;
  }

  listTerms(page = 0, pageSize = 20): Promise<DirectoryPage> {
    return this.get(`/terms?page=${page}&page_size=${pageSize}`);
  }

  getTerm(termId: string): Promise<TermDetail> {
    return this.get(`/terms/${encodeURIComponent(termId)}`);
  }

  search(query: string): Promise<SearchResponse> {
    return this.get(`/search?q=${encodeURIComponent(query)}`);
  }

  provenance(
    termId: string,
    order: "oldest_first" | "newest_first" = "newest_first",
  ): Promise<TimelineResponse> {
    return this.get(`/terms/${encodeURIComponent(termId)}/provenance?order=${order}`);
  }

  createTerm(label: string, tags: string[]): Promise<{ term: { id: string } }> {
    return this.send("POST", "/terms", { label, tags });
  }

  addDefinition(termId: string, body: string): Promise<{ definition_id: string }> {
    return this.send("POST", `/terms/${encodeURIComponent(termId)}/definitions`, { body });
  }

  addExample(termId: string, body: string): Promise<{ example_id: string }> {
    return this.send("POST", `/terms/${encodeURIComponent(termId)}/examples`, { body });
  }

  addComment(
    definitionId: string,
    body: string,
    disposition: "discussion" | "feedback" = "discussion",
  ): Promise<{ comment_id: string }> {
    return this.send("POST", `/definitions/${encodeURIComponent(definitionId)}/comments`, {
      body,
      disposition,
    });
  }

  setVote(definitionId: string, value: 1 | -1): Promise<{ tally: unknown }> {
    return this.send("PUT", `/definitions/${encodeURIComponent(definitionId)}/vote`, {
      value,
    });
  }

  generate(termId: string): Promise<GenerationResponse> {
    return this.send("POST", `/terms/${encodeURIComponent(termId)}/ai-definition`);
  }

  refine(termId: string): Promise<GenerationResponse> {
    return this.send("POST", `/terms/${encodeURIComponent(termId)}/ai-definition/refine`);
  }
}
