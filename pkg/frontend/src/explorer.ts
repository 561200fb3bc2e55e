/** Policy explorer: one collapsible tree per partition with accuracy
 * badges; the active session's partition and root-path are highlighted. */

import { fixed } from "./format.js";
import type { PartitionView, PolicyView, SessionView, TreeNode } from "./types.js";
import { isLeaf } from "./types.js";

const BUCKET_LABELS = { B1: "score < 3", B2: "score 3-4C", B3: "score > 4" } as const;

function bucketOf(birads: string): "B1" | "B2" | "B3" {
  if (birads === "1" || birads === "2") return "B1";
  if (birads === "5" || birads === "6") return "B3";
  return "B2";
}

function activePath(session: SessionView | null, partitionId: number): string[] {
  if (!session || session.partition_id !== partitionId) {
    return [];
  }
  return session.history.map((step) => bucketOf(step.birads));
}

function renderNode(node: TreeNode, path: string[], onPath: boolean): HTMLElement {
  if (isLeaf(node)) {
    const leaf = document.createElement("p");
    leaf.className = "leaf" + (onPath && path.length === 0 ? " active" : "");
    leaf.textContent =
      node.label === 1 ? "biopsy referral" : "regular followup";
    leaf.dataset.count = String(node.n);
    return leaf;
  }
  const details = document.createElement("details");
  details.className = "tree-node" + (onPath ? " active" : "");
  details.open = onPath || true;
  const summary = document.createElement("summary");
  summary.textContent = node.test;
  details.appendChild(summary);
  const list = document.createElement("ul");
  for (const bucket of ["B1", "B2", "B3"] as const) {
    const item = document.createElement("li");
    item.dataset.bucket = bucket;
    const edge = document.createElement("span");
    edge.className = "edge";
    edge.textContent = `${bucket} (${BUCKET_LABELS[bucket]}): `;
    item.appendChild(edge);
    const childOnPath = onPath && path.length > 0 && path[0] === bucket;
    if (childOnPath) {
      item.classList.add("active-edge");
    }
    item.appendChild(
      renderNode(node.children[bucket], childOnPath ? path.slice(1) : [], childOnPath),
    );
    list.appendChild(item);
  }
  details.appendChild(list);
  return details;
}

function renderPartition(
  partition: PartitionView,
  session: SessionView | null,
): HTMLElement {
  const panel = document.createElement("section");
  panel.className = "partition";
  panel.dataset.partitionId = String(partition.id);
  if (session && session.partition_id === partition.id) {
    panel.classList.add("active");
  }
  const heading = document.createElement("h3");
  heading.textContent = `Partition ${partition.id}`;
  panel.appendChild(heading);

  const badges = document.createElement("p");
  badges.className = "badges";
  const fnr = document.createElement("span");
  fnr.className = "badge fnr";
  fnr.textContent = `FNR ${fixed(partition.stats.fnr, 3)}`;
  const fpr = document.createElement("span");
  fpr.className = "badge fpr";
  fpr.textContent = `FPR ${fixed(partition.stats.fpr, 3)}`;
  const size = document.createElement("span");
  size.className = "badge size";
  size.textContent = `n ${partition.m_j}`;
  badges.append(fnr, " ", fpr, " ", size);
  panel.appendChild(badges);

  panel.appendChild(
    renderNode(partition.tree, activePath(session, partition.id), true),
  );
  return panel;
}

export function renderExplorer(
  root: HTMLElement,
  policy: PolicyView,
  session: SessionView | null,
): void {
  const container = document.createElement("section");
  container.className = "explorer";
  container.setAttribute("aria-label", "policy explorer");
  for (const partition of policy.partitions) {
    container.appendChild(renderPartition(partition, session));
  }
  root.replaceChildren(container);
}
