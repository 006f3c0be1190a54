/** Typed client for the /v1 service API with injectable fetch for tests. */

import type {
  DecisionRequest,
  HealthResponse,
  OutcomeRecord,
  RunningPlaceholder,
  SearchResponse,
  CatalogueHit,
} from "./types.js";

export interface ApiErrorBody {
  code: string;
  message: string;
  detail?: unknown;
}

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;
  readonly detail: unknown;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.name = "ApiError";
    this.status = status;
    this.code = body.code;
    this.detail = body.detail ?? null;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface ClientOptions {
  baseUrl?: string;
  token?: string | null;
  fetchFn?: FetchLike;
}

export class ServiceClient {
  private readonly baseUrl: string;
  private token: string | null;
  private readonly fetchFn: FetchLike;

  constructor(options: ClientOptions = {}) {
    this.baseUrl = (options.baseUrl ?? "").replace(/\/+$/, "");
    this.token = options.token ?? null;
    this.fetchFn =
      options.fetchFn ?? ((url, init) => globalThis.fetch(url, init));
  }

  setToken(token: string | null): void {
    this.token = token && token.trim() ? token.trim() : null;
  }

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (this.token) {
      headers["authorization"] = `Bearer ${this.token}`;
    }
    return headers;
  }

  private async request<T>(path: string, init: RequestInit = {}): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(this.baseUrl + path, {
        ...init,
        headers: { ...this.headers(), ...(init.headers as object | undefined) },
      });
    } catch (err) {
      throw new ApiError(0, {
        code: "backend",
        message: `service unreachable: ${String(err)}`,
      });
    }
    if (!resp.ok) {
      let body: ApiErrorBody;
      try {
        body = (await resp.json()) as ApiErrorBody;
      } catch {
        body = { code: "backend", message: `HTTP ${resp.status}` };
      }
      throw new ApiError(resp.status, body);
    }
    return (await resp.json()) as T;
  }

  health(): Promise<HealthResponse> {
    return this.request("/v1/health");
  }

  submitAction(statement: string, idempotencyKey?: string): Promise<{ outcome_id: string }> {
    const headers: Record<string, string> = {};
    if (idempotencyKey) {
      headers["idempotency-key"] = idempotencyKey;
    }
    return this.request("/v1/actions", {
      method: "POST",
      headers,
      body: JSON.stringify({ statement }),
    });
  }

  getOutcome(id: string): Promise<OutcomeRecord | RunningPlaceholder> {
    return this.request(`/v1/outcomes/${encodeURIComponent(id)}`);
  }

  listPending(): Promise<OutcomeRecord[]> {
    return this.request("/v1/reviews?status=pending");
  }

  submitDecision(outcomeId: string, body: DecisionRequest): Promise<OutcomeRecord> {
    return this.request(`/v1/reviews/${encodeURIComponent(outcomeId)}/decision`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  search(q: string, k = 5): Promise<SearchResponse> {
    const params = new URLSearchParams({ q, k: String(k) });
    return this.request(`/v1/catalogue/search?${params.toString()}`);
  }

  entries(): Promise<CatalogueHit[]> {
    return this.request("/v1/catalogue/entries");
  }
}
