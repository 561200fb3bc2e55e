import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { renderExplorer } from "../src/explorer.js";
import { createConsole } from "../src/main.js";
import type { SessionView } from "../src/types.js";
import {
  clickScore,
  fillIntake,
  loadFlow,
  loadPolicyFixture,
  makeFetchStub,
  settle,
  submitIntake,
} from "./helpers.js";

describe("policy explorer", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = "<div id='root'></div>";
    root = document.getElementById("root") as HTMLElement;
  });

  it("renders one panel per partition with accuracy badges", () => {
    const policy = loadPolicyFixture();
    renderExplorer(root, policy, null);
    const panels = root.querySelectorAll(".partition");
    expect(panels.length).toBe(policy.partitions.length);
    for (const partition of policy.partitions) {
      const panel = root.querySelector(
        `.partition[data-partition-id="${partition.id}"]`,
      ) as HTMLElement;
      const fnr = panel.querySelector(".badge.fnr") as HTMLElement;
      const fpr = panel.querySelector(".badge.fpr") as HTMLElement;
      expect(fnr.textContent).toBe(`FNR ${partition.stats.fnr.toFixed(3)}`);
      expect(fpr.textContent).toBe(`FPR ${partition.stats.fpr.toFixed(3)}`);
    }
  });

  it("highlights the active session's partition and path", async () => {
    const policy = loadPolicyFixture();
    const flow = loadFlow();
    const { stub } = makeFetchStub(policy, flow);
    const handle = createConsole(root, new ApiClient(stub));
    await handle.ready;
    fillIntake(root, flow.features);
    submitIntake(root);
    await settle();
    const session = handle.view().session as SessionView;
    clickScore(root, flow.scores[session.recommended_test as string]);
    await settle();

    const updated = handle.view().session as SessionView;
    const active = root.querySelector(".partition.active") as HTMLElement;
    expect(active.dataset.partitionId).toBe(String(updated.partition_id));
    const highlighted = active.querySelectorAll(".active-edge");
    expect(highlighted.length).toBe(updated.history.length);
  });

  it("keeps every interactive element keyboard-reachable", async () => {
    const policy = loadPolicyFixture();
    const flow = loadFlow();
    const { stub } = makeFetchStub(policy, flow);
    const handle = createConsole(root, new ApiClient(stub));
    await handle.ready;
    fillIntake(root, flow.features);
    submitIntake(root);
    await settle();

    const interactive = root.querySelectorAll(
      "button, input, select, a, summary, [onclick], [role='button']",
    );
    expect(interactive.length).toBeGreaterThan(0);
    for (const element of Array.from(interactive)) {
      const tag = element.tagName.toLowerCase();
      const focusable =
        ["button", "input", "select", "summary"].includes(tag) ||
        (tag === "a" && element.hasAttribute("href")) ||
        Number((element as HTMLElement).tabIndex) >= 0;
      expect(focusable, `${tag} must be keyboard reachable`).toBe(true);
    }
  });
});
