/** DOM rendering: sandboxed page frame, identifiers, buttons, tallies. */

import { Label } from "./api.js";
import { SessionController } from "./session.js";
import { ApiClient } from "./api.js";

const LABEL_TITLES: Record<Label, string> = {
  spam: "Spam (s)",
  nonspam: "Nonspam (n)",
  unknown: "Unknown (u)",
};

export function renderApp(
  root: HTMLElement,
  controller: SessionController,
  api: ApiClient,
): void {
  root.innerHTML = `
    <header class="bar">
      <span id="doc-id"></span>
      <span id="counts"></span>
      <progress id="progress" value="0" max="1"></progress>
    </header>
    <div id="buttons"></div>
    <iframe id="page" sandbox="" referrerpolicy="no-referrer"></iframe>
    <footer id="status"></footer>
  `;
  const buttons = root.querySelector("#buttons") as HTMLElement;
  for (const label of Object.keys(LABEL_TITLES) as Label[]) {
    const button = root.ownerDocument.createElement("button");
    button.textContent = LABEL_TITLES[label];
    button.dataset.label = label;
    button.addEventListener("click", () => void controller.judge(label));
    buttons.appendChild(button);
  }

  controller.onChange((state) => {
    const frame = root.querySelector("#page") as HTMLIFrameElement;
    const docId = root.querySelector("#doc-id") as HTMLElement;
    const counts = root.querySelector("#counts") as HTMLElement;
    const meter = root.querySelector("#progress") as HTMLProgressElement;
    const status = root.querySelector("#status") as HTMLElement;

    if (state.done) {
      frame.removeAttribute("src");
      docId.textContent = "session complete";
    } else if (state.task) {
      docId.textContent = state.task.doc_id ?? "";
      const url = api.pageUrl(state.task);
      if (url) {
        frame.src = url;
      }
    }
    if (state.progress) {
      const { judged, remaining, tallies } = state.progress;
      const total = judged + remaining;
      counts.textContent = `${judged}/${total} — spam ${tallies.spam ?? 0}, nonspam ${tallies.nonspam ?? 0}, unknown ${tallies.unknown ?? 0}`;
      meter.max = Math.max(total, 1);
      meter.value = judged;
    }
    status.textContent =
      state.pendingDeliveries > 0
        ? `${state.pendingDeliveries} judgment(s) queued for retry`
        : "";
  });
}
