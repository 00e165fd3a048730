/** Entry point: wire the API client, session controller, keyboard and DOM.
 *
 * Query parameters: ?api=<base url>&assessor=<name>&size=<n>&seed=<n>,
 * or ?session=<id> to resume an existing session.
 */

import { ApiClient } from "./api.js";
import { bindKeyboard } from "./keyboard.js";
import { SessionController } from "./session.js";
import { renderApp } from "./ui.js";

export async function bootstrap(win: Window): Promise<SessionController> {
  const params = new URLSearchParams(win.location.search);
  const api = new ApiClient(params.get("api") ?? "");
  const assessor = params.get("assessor") ?? "anonymous";
  const controller = new SessionController(api, assessor);

  const root = win.document.getElementById("app");
  if (!root) {
    throw new Error("missing #app element");
  }
  renderApp(root, controller, api);
  bindKeyboard(win, (label) => void controller.judge(label));
  win.addEventListener("online", () => void controller.retryPending());

  const existing = params.get("session");
  if (existing) {
    await controller.attach(existing);
  } else {
    await controller.start({
      size: Number(params.get("size") ?? "20"),
      seed: Number(params.get("seed") ?? "0"),
      with_replacement: true,
    });
  }
  return controller;
}

declare global {
  interface Window {
    __adjudicator?: Promise<SessionController>;
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  window.__adjudicator = bootstrap(window);
}
