/** Console bootstrap: fetch the policy, render intake, wire the session
 * panel and the explorer together. Pure client of /api/v1; the session id
 * is the only state that outlives a render. */

import { ApiClient, ApiRequestError } from "./api.js";
import { renderExplorer } from "./explorer.js";
import { renderIntake } from "./intake.js";
import { renderSession } from "./session.js";
import { applyError, applyResponse, emptyViewModel } from "./state.js";
import type { SessionViewModel } from "./state.js";
import type { PolicyView } from "./types.js";

export interface ConsoleHandle {
  ready: Promise<void>;
  view(): SessionViewModel;
}

export function createConsole(root: HTMLElement, client: ApiClient): ConsoleHandle {
  root.innerHTML = `
    <header><h1>Screening console</h1></header>
    <div id="banner" role="alert"></div>
    <main>
      <div id="intake"></div>
      <div id="session"></div>
      <div id="explorer"></div>
    </main>
  `;
  const banner = root.querySelector("#banner") as HTMLElement;
  const intakeRoot = root.querySelector("#intake") as HTMLElement;
  const sessionRoot = root.querySelector("#session") as HTMLElement;
  const explorerRoot = root.querySelector("#explorer") as HTMLElement;

  let policy: PolicyView | null = null;
  let view = emptyViewModel();

  function redraw(): void {
    if (!policy) return;
    renderSession(sessionRoot, view, policy, postOutcome);
    renderExplorer(explorerRoot, policy, view.session);
  }

  async function postOutcome(test: string, birads: string): Promise<void> {
    if (!policy || !view.session) return;
    const sessionId = view.session.session_id;
    view = { ...view, pendingRequest: true };
    redraw();
    try {
      const session = await client.postOutcome(sessionId, test, birads);
      view = applyResponse(view, policy, session);
    } catch (error) {
      view = applyError(
        view,
        error instanceof ApiRequestError ? error.body.message : String(error),
      );
    }
    redraw();
  }

  async function startSession(features: Record<string, number>): Promise<void> {
    if (!policy) return;
    try {
      const session = await client.createSession(features);
      view = applyResponse(emptyViewModel(), policy, session);
    } catch (error) {
      view = applyError(
        view,
        error instanceof ApiRequestError ? error.body.message : String(error),
      );
    }
    redraw();
  }

  const ready = (async () => {
    try {
      policy = await client.getPolicy();
    } catch (error) {
      const retry = document.createElement("button");
      retry.type = "button";
      retry.textContent = "Retry";
      banner.textContent = "could not load the policy: " + String(error) + " ";
      banner.appendChild(retry);
      retry.addEventListener("click", () => {
        banner.replaceChildren();
        void createConsole(root, client);
      });
      return;
    }
    renderIntake(intakeRoot, policy.schema, (features) => void startSession(features));
    redraw();
  })();

  return { ready, view: () => view };
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  createConsole(document.getElementById("app") as HTMLElement, new ApiClient());
}
