/** Typed client for the annotation service REST API.
 *
 * Every method maps to one endpoint and returns the parsed JSON body.
 * Non-2xx responses become ApiError carrying the problem+json fields, so
 * callers can branch on status without touching the response object.
 */

export interface TablePayload {
  columns: string[];
  rows: string[][];
}

export interface SessionConfig {
  s_max?: number;
  beam?: number | null;
  k?: number;
  l?: number;
  tolerance?: number;
  seed?: number;
  cap?: number;
}

export interface CreateRequest {
  question: string;
  answer: string[];
  table: TablePayload;
  config?: SessionConfig;
}

export interface Progress {
  state: string;
  initial: number;
  surviving: number;
  annotated: number;
  worlds_total: number;
}

export interface SessionView extends Progress {
  id: string;
  question: string;
  answer: string[];
  z_size: number;
  annotations: Record<string, string[]>;
  error: string | null;
}

export interface WorldPayload {
  index: number;
  id: string;
  columns: string[];
  rows: string[][];
}

export interface NextWorld extends Progress {
  done?: boolean;
  question?: string;
  world?: WorldPayload;
  worlds?: WorldPayload[];
  objective?: number;
}

export interface ResultClass {
  representative: string;
  members: number;
}

export interface SessionResult {
  state: string;
  all_pruned: boolean;
  classes: ResultClass[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly title: string,
    readonly detail: string,
  ) {
    super(`${status} ${title}: ${detail}`);
    this.name = "ApiError";
  }
}

async function toError(response: Response): Promise<ApiError> {
  let title = response.statusText || "request failed";
  let detail = "";
  try {
    const body = await response.json();
    if (typeof body.title === "string") title = body.title;
    if (typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ApiError(response.status, title, detail);
}

export class Api {
  constructor(
    readonly base: string = "",
    private readonly fetchFn: typeof fetch = (...args) => globalThis.fetch(...args),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    let response: Response;
    try {
      response = await this.fetchFn(`${this.base}${path}`, init);
    } catch (e) {
      throw new ApiError(0, "network failure", e instanceof Error ? e.message : String(e));
    }
    if (!response.ok) throw await toError(response);
    return response.json();
  }

  createSession(body: CreateRequest, idempotencyKey?: string): Promise<{ id: string; state: string }> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (idempotencyKey) headers["Idempotency-Key"] = idempotencyKey;
    return this.request("/sessions", {
      method: "POST",
      headers,
      body: JSON.stringify(body),
    }) as Promise<{ id: string; state: string }>;
  }

  getSession(id: string): Promise<SessionView> {
    return this.request(`/sessions/${id}`) as Promise<SessionView>;
  }

  nextWorld(id: string, mode: "greedy" | "batch" = "greedy"): Promise<NextWorld> {
    return this.request(`/sessions/${id}/next-world?mode=${mode}`) as Promise<NextWorld>;
  }

  annotate(id: string, world: number | string, answer: string[]): Promise<Progress> {
    return this.request(`/sessions/${id}/annotations`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ world, answer }),
    }) as Promise<Progress>;
  }

  result(id: string): Promise<SessionResult> {
    return this.request(`/sessions/${id}/result`) as Promise<SessionResult>;
  }
}
