/** Session view model: pure derivation from service responses.
 *
 * The transcript lines are built to match the terminal client's output
 * byte for byte, which the contract tests verify against a recorded
 * fixture. No clinical logic lives here beyond formatting what the service
 * said.
 */

import { fixed, intervalText, verdictText } from "./format.js";
import type { PolicyView, SessionView } from "./types.js";

export interface SessionViewModel {
  session: SessionView | null;
  transcript: string[];
  pendingRequest: boolean;
  error: string | null;
}

export function emptyViewModel(): SessionViewModel {
  return { session: null, transcript: [], pendingRequest: false, error: null };
}

function stepLines(policy: PolicyView, session: SessionView): string[] {
  if (session.status === "awaiting_outcome" && session.recommended_test) {
    const cost = policy.costs.tests[session.recommended_test];
    return [
      `recommended test: ${session.recommended_test} (cost ${fixed(cost, 2)})`,
      `intermediate assessment: ${session.diagnosis.label} ` +
        `(error interval ${intervalText(session.diagnosis.interval)})`,
    ];
  }
  return [
    `final recommendation: ${verdictText(session.final_label as 0 | 1)}`,
    `total screening cost: ${fixed(session.cost, 2)}`,
    `error interval: ${intervalText(session.diagnosis.interval)}`,
  ];
}

export function applyResponse(
  view: SessionViewModel,
  policy: PolicyView,
  session: SessionView,
): SessionViewModel {
  const lines = [...view.transcript];
  if (view.session === null) {
    lines.push(`partition: ${session.partition_id}`);
  }
  lines.push(...stepLines(policy, session));
  return { session, transcript: lines, pendingRequest: false, error: null };
}

export function applyError(view: SessionViewModel, message: string): SessionViewModel {
  // Inline error; history and transcript stay untouched.
  return { ...view, pendingRequest: false, error: message };
}
