/** Step-by-step session panel: recommendation card, BI-RADS picker,
 * history timeline, and the final card. All content comes from the last
 * service response held in the view model. */

import { fixed, intervalText, verdictText } from "./format.js";
import type { SessionViewModel } from "./state.js";
import type { PolicyView } from "./types.js";
import { BIRADS_TOKENS } from "./types.js";

export function renderSession(
  root: HTMLElement,
  view: SessionViewModel,
  policy: PolicyView,
  onOutcome: (test: string, birads: string) => void,
): void {
  const session = view.session;
  if (!session) {
    root.replaceChildren();
    return;
  }
  const panel = document.createElement("section");
  panel.className = "session";
  panel.setAttribute("aria-label", "screening session");

  const partition = document.createElement("p");
  partition.className = "partition-id";
  partition.textContent = `partition: ${session.partition_id}`;
  panel.appendChild(partition);

  const timeline = document.createElement("ol");
  timeline.className = "history";
  for (const step of session.history) {
    const item = document.createElement("li");
    item.textContent = `${step.test}: BI-RADS ${step.birads}`;
    timeline.appendChild(item);
  }
  panel.appendChild(timeline);

  const card = document.createElement("div");
  if (session.status === "awaiting_outcome" && session.recommended_test) {
    const test = session.recommended_test;
    card.className = "card awaiting";
    const heading = document.createElement("h2");
    heading.textContent = `Recommended test: ${test}`;
    heading.dataset.test = test;
    card.appendChild(heading);

    const costLine = document.createElement("p");
    costLine.className = "cost";
    costLine.textContent = `test cost ${fixed(policy.costs.tests[test], 2)}, accumulated ${fixed(session.cost, 2)}`;
    card.appendChild(costLine);

    const diagnosis = document.createElement("p");
    diagnosis.className = "diagnosis";
    diagnosis.textContent =
      `intermediate assessment: ${session.diagnosis.label} ` +
      `(error interval ${intervalText(session.diagnosis.interval)})`;
    card.appendChild(diagnosis);

    const picker = document.createElement("div");
    picker.className = "picker";
    picker.setAttribute("role", "group");
    picker.setAttribute("aria-label", `BI-RADS result for ${test}`);
    for (const token of BIRADS_TOKENS) {
      const button = document.createElement("button");
      button.type = "button";
      button.className = "birads";
      button.textContent = token;
      button.addEventListener("click", () => onOutcome(test, token));
      if (view.pendingRequest) {
        button.disabled = true;
      }
      picker.appendChild(button);
    }
    card.appendChild(picker);
  } else {
    card.className = "card final";
    const heading = document.createElement("h2");
    heading.textContent = `Final recommendation: ${verdictText(session.final_label as 0 | 1)}`;
    card.appendChild(heading);
    const cost = document.createElement("p");
    cost.className = "cost";
    cost.textContent = `total screening cost: ${fixed(session.cost, 2)}`;
    card.appendChild(cost);
    const interval = document.createElement("p");
    interval.className = "diagnosis";
    interval.textContent = `error interval: ${intervalText(session.diagnosis.interval)}`;
    card.appendChild(interval);
  }
  panel.appendChild(card);

  const error = document.createElement("p");
  error.className = "session-error";
  error.setAttribute("role", "alert");
  error.textContent = view.error ?? "";
  panel.appendChild(error);

  root.replaceChildren(panel);
}
