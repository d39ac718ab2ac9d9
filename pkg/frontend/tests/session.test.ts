/** End-to-end session flow against the spawned fixture-profile server:
 * ask -> clarification prompt -> clarify -> final answer with citations,
 * with one forced mid-stream reconnect and zero event loss. */

import { afterEach, describe, expect, it } from "vitest";

import { ApiError, FetchLike, SessionApi, SessionEvent } from "../src/api.js";
import { openSession, SessionClient } from "../src/client.js";
import { renderSession } from "../src/view.js";
import { BASE_URL } from "./config.js";

const clients: SessionClient[] = [];

afterEach(async () => {
  while (clients.length) await clients.pop()!.stop();
});

async function open(fetchImpl?: FetchLike): Promise<SessionClient> {
  const api = new SessionApi(BASE_URL, fetchImpl);
  const client = await openSession(api, { pollWait: 0.5, retryDelayMs: 20 });
  clients.push(client);
  return client;
}

const has = (type: string) => (events: SessionEvent[]) =>
  events.some((e) => e.type === type);

describe("session flow", () => {
  it("ask -> clarify -> final answer, surviving a forced reconnect", async () => {
    // drop the connection on one event poll midway through the episode
    let eventPolls = 0;
    let dropped = false;
    const flaky: FetchLike = (input, init) => {
      if (String(input).includes("/events")) {
        eventPolls += 1;
        if (eventPolls === 2 && !dropped) {
          dropped = true;
          return Promise.reject(new TypeError("network dropped"));
        }
      }
      return fetch(input, init);
    };

    const client = await open(flaky);
    await client.ask("What is the latest fair value per share?");
    await client.waitFor(has("clarification_request"));
    expect(client.pendingQuestion).toBe("Which fiscal year should I use?");
    expect(renderSession(client.events).canSubmit).toBe(false);

    // a second question while the clarification is pending is refused
    await expect(client.ask("another question")).rejects.toMatchObject({
      status: 409,
    });

    await client.clarify("2014");
    await client.waitFor(has("final_answer"));

    const view = renderSession(client.events);
    const answer = view.messages[view.messages.length - 1];
    expect(answer.role).toBe("assistant");
    expect(answer.text).toContain("2014");
    expect(answer.citations!.length).toBeGreaterThan(0);
    const traced = new Set(view.trace.citations.map((c) => c.chunk_id));
    for (const cite of answer.citations!) expect(traced.has(cite)).toBe(true);

    // the reconnect actually happened, and lost nothing: the incremental
    // transcript equals a from-scratch server replay
    expect(dropped).toBe(true);
    expect(client.reconnects).toBeGreaterThanOrEqual(1);
    const replay = (await new SessionApi(BASE_URL).getEvents(
      client.sessionId,
      0,
    )) as { events: SessionEvent[] };
    expect(client.events).toEqual(replay.events);
    const cursors = client.events.map((e) => e.cursor);
    expect(cursors).toEqual(cursors.map((_, i) => i));
  });

  it("answers year-qualified questions without clarification", async () => {
    const client = await open();
    await client.ask("What was the fair value per share in 2014?");
    await client.waitFor(has("final_answer"));
    const view = renderSession(client.events);
    expect(view.messages.some((m) => m.role === "clarification")).toBe(false);
    expect(view.messages[view.messages.length - 1].text).toContain("45.45");
  });

  it("clarify with nothing pending refreshes instead of failing", async () => {
    const client = await open();
    await client.clarify("stale answer");
    expect(client.pendingQuestion).toBeNull();
  });

  it("new_session starts with an empty transcript and a fresh id", async () => {
    const a = await open();
    const b = await open();
    expect(a.sessionId).not.toBe(b.sessionId);
    expect(b.events).toHaveLength(0);
  });

  it("unknown session surfaces a 404 ApiError", async () => {
    const api = new SessionApi(BASE_URL);
    await expect(api.getSession("nope")).rejects.toBeInstanceOf(ApiError);
  });
});
