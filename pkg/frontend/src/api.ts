// Typed client for the session service. Every number the UI shows comes
// straight out of these payloads.

export interface Entry {
  node: number;
  kind: "query" | "item";
  pos: number;
  score: number;
  display: string;
}

export interface TargetInfo {
  item_id: string;
  words: string[];
}

export interface CreateResponse {
  session_id: string;
  user_id: string;
  round: number;
  list: Entry[];
  config: Record<string, unknown>;
  targets: TargetInfo[];
}

export interface SessionSummary {
  outcome: string;
  rounds: number;
  success_round: number | null;
  user_id: string;
  transcript: string[];
}

export interface FeedbackResponse {
  outcome: "pending" | "success" | "exhausted";
  round?: number;
  list?: Entry[];
  summary?: SessionSummary;
}

export interface StateNode {
  node: number;
  words: string[];
  kind: string;
  score: number;
  visited: boolean;
  display: string;
}

export interface StateResponse {
  session_id: string;
  round: number;
  outcome: string;
  nodes: StateNode[];
}

export interface UserInfo {
  user_id: string;
  has_session: boolean;
}

export type ResponseKind = "yes" | "no" | "not_care";

export class ApiError extends Error {
  constructor(readonly status: number, readonly code: string) {
    super(`${status}: ${code}`);
  }
}

async function parse<T>(resp: Response): Promise<T> {
  let body: unknown = null;
  try {
    body = await resp.json();
  } catch {
    // fall through to the status check
  }
  if (!resp.ok) {
    const code = (body as { error?: string } | null)?.error ?? "http_error";
    throw new ApiError(resp.status, code);
  }
  return body as T;
}

export class Client {
  constructor(readonly baseUrl: string) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  async health(): Promise<{ status: string; nodes: number; items: number }> {
    return parse(await fetch(this.url("/api/health")));
  }

  async users(): Promise<UserInfo[]> {
    const body = await parse<{ users: UserInfo[] }>(await fetch(this.url("/api/users")));
    return body.users;
  }

  async createSession(
    userId: string,
    config: Record<string, unknown> = {},
  ): Promise<CreateResponse> {
    return parse(await fetch(this.url("/api/sessions"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ user_id: userId, source: "auto", config }),
    }));
  }

  async submitFeedback(
    sessionId: string,
    responses: { node: number; response: ResponseKind }[],
  ): Promise<FeedbackResponse> {
    return parse(await fetch(this.url(`/api/sessions/${sessionId}/feedback`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(responses),
    }));
  }

  async sessionInfo(sessionId: string): Promise<{ round: number; list: Entry[]; outcome: string }> {
    return parse(await fetch(this.url(`/api/sessions/${sessionId}`)));
  }

  async state(sessionId: string, topM = 12): Promise<StateResponse> {
    return parse(await fetch(this.url(`/api/sessions/${sessionId}/state?top_m=${topM}`)));
  }

  async remove(sessionId: string): Promise<void> {
    await parse(await fetch(this.url(`/api/sessions/${sessionId}`), { method: "DELETE" }));
  }
}
