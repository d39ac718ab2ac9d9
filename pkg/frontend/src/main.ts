/** Browser bootstrap: wires the polling client and view reducer to the page.
 * Serve the package's HTTP service, then open index.html with ?api=<url>. */

import { SessionApi } from "./api.js";
import { openSession, SessionClient } from "./client.js";
import { renderHtml, renderSession } from "./view.js";

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const api = new SessionApi(params.get("api") ?? "http://127.0.0.1:8765");
  const root = document.getElementById("chat")!;
  const form = document.getElementById("ask") as HTMLFormElement;
  const input = document.getElementById("text") as HTMLInputElement;
  const newButton = document.getElementById("new-session") as HTMLButtonElement;

  let client: SessionClient = await openSession(api);

  const redraw = () => {
    const view = renderSession(client.events);
    root.innerHTML = renderHtml(view);
    input.placeholder = view.pendingQuestion
      ? "answer the clarification above"
      : "ask a question";
  };
  client.onUpdate(redraw);

  form.addEventListener("submit", async (e) => {
    e.preventDefault();
    const text = input.value.trim();
    if (!text) return;
    input.value = "";
    const view = renderSession(client.events);
    if (view.pendingQuestion !== null) {
      await client.clarify(text);
    } else {
      await client.ask(text);
    }
  });

  newButton.addEventListener("click", async () => {
    await client.stop();
    client = await openSession(api);
    client.onUpdate(redraw);
    redraw();
  });

  redraw();
}

boot().catch((err) => {
  document.body.textContent = `failed to start: ${err}`;
});
