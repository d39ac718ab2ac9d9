/** Spawns the fixture-profile HTTP service for the session tests and seeds
 * it with the two-document corpus. Torn down when the run ends. */

import { ChildProcess, spawn } from "node:child_process";
import { BASE_URL, FIXTURE_DOCS, PORT } from "./config.js";

let server: ChildProcess | undefined;

export async function setup(): Promise<void> {
  server = spawn("finqa", ["serve", "--port", String(PORT)], {
    stdio: "ignore",
  });
  const deadline = Date.now() + 30_000;
  for (;;) {
    try {
      const res = await fetch(`${BASE_URL}/healthz`);
      if (res.ok) break;
    } catch {
      /* not up yet */
    }
    if (Date.now() > deadline) {
      throw new Error("fixture server did not come up on " + BASE_URL);
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  const res = await fetch(`${BASE_URL}/ingest`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ docs: FIXTURE_DOCS }),
  });
  if (!res.ok) throw new Error(`ingest failed: ${res.status}`);
}

export async function teardown(): Promise<void> {
  server?.kill();
}
