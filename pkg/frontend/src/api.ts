/** Typed client for the qa service's session routes. Nothing else: the UI
 * speaks only the documented HTTP surface. */

export interface SessionEnvelope {
  session_id: string;
  created_at: string;
  status: string;
  cursor: number;
}

export interface SessionEvent {
  cursor: number;
  type: string;
  [key: string]: unknown;
}

export interface EventBatch {
  events: SessionEvent[];
  cursor: number;
  status: string;
  pending_question: string | null;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export class SessionApi {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!res.ok) {
      let detail = res.statusText;
      try {
        detail = ((await res.json()) as { detail?: string }).detail ?? detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  createSession(): Promise<SessionEnvelope> {
    return this.post("/sessions", {});
  }

  getSession(sessionId: string): Promise<SessionEnvelope> {
    return this.request(`/sessions/${sessionId}`);
  }

  postMessage(sessionId: string, text: string): Promise<{ accepted: boolean }> {
    return this.post(`/sessions/${sessionId}/messages`, { text });
  }

  postClarification(sessionId: string, text: string): Promise<{ accepted: boolean }> {
    return this.post(`/sessions/${sessionId}/clarifications`, { text });
  }

  getEvents(sessionId: string, cursor: number, wait = 0): Promise<EventBatch> {
    const params = new URLSearchParams({ cursor: String(cursor), wait: String(wait) });
    return this.request(`/sessions/${sessionId}/events?${params}`);
  }
}
