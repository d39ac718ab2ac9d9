/** One polling loop per open session. Events are accumulated in cursor
 * order; a dropped poll resumes from the last cursor, so reconnects lose
 * nothing and duplicate nothing. */

import { ApiError, EventBatch, SessionApi, SessionEvent } from "./api.js";

export interface ClientOptions {
  pollWait?: number; // seconds the server may hold an empty poll
  retryDelayMs?: number; // backoff after a failed poll
}

export class SessionClient {
  readonly events: SessionEvent[] = [];
  status = "open";
  pendingQuestion: string | null = null;
  reconnects = 0;

  private cursor = 0;
  private running = false;
  private loopDone: Promise<void> = Promise.resolve();
  private listeners: Array<() => void> = [];
  private pollWait: number;
  private retryDelayMs: number;

  constructor(
    private api: SessionApi,
    readonly sessionId: string,
    opts: ClientOptions = {},
  ) {
    this.pollWait = opts.pollWait ?? 1.0;
    this.retryDelayMs = opts.retryDelayMs ?? 100;
  }

  onUpdate(cb: () => void): void {
    this.listeners.push(cb);
  }

  start(): void {
    if (this.running) return;
    this.running = true;
    this.loopDone = this.loop();
  }

  async stop(): Promise<void> {
    this.running = false;
    await this.loopDone;
  }

  async ask(text: string): Promise<void> {
    await this.api.postMessage(this.sessionId, text);
  }

  /** Answer the pending clarification. A 409 means the server no longer
   * has one pending (stale prompt): refresh local state instead of failing. */
  async clarify(text: string): Promise<void> {
    try {
      await this.api.postClarification(this.sessionId, text);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        const env = await this.api.getSession(this.sessionId);
        this.status = env.status;
        this.pendingQuestion = null;
        this.notify();
        return;
      }
      throw err;
    }
  }

  /** Wait until the accumulated events satisfy a predicate. */
  async waitFor(pred: (events: SessionEvent[]) => boolean, timeoutMs = 15000): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
      if (pred(this.events)) return;
      await delay(20);
    }
    throw new Error(`timed out waiting; saw ${this.events.length} events`);
  }

  private async loop(): Promise<void> {
    while (this.running) {
      let batch: EventBatch;
      try {
        batch = await this.api.getEvents(this.sessionId, this.cursor, this.pollWait);
      } catch {
        this.reconnects += 1;
        await delay(this.retryDelayMs);
        continue; // resume from the same cursor
      }
      this.status = batch.status;
      this.pendingQuestion = batch.pending_question;
      let changed = false;
      for (const ev of batch.events) {
        if (ev.cursor < this.cursor) continue; // duplicate after a retry
        if (ev.cursor !== this.cursor) {
          throw new Error(`event gap: expected cursor ${this.cursor}, got ${ev.cursor}`);
        }
        this.events.push(ev);
        this.cursor = ev.cursor + 1;
        changed = true;
      }
      if (changed || batch.events.length === 0) this.notify();
    }
  }

  private notify(): void {
    for (const cb of this.listeners) cb();
  }
}

function delay(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export async function openSession(api: SessionApi, opts: ClientOptions = {}): Promise<SessionClient> {
  const env = await api.createSession();
  const client = new SessionClient(api, env.session_id, opts);
  client.start();
  return client;
}
