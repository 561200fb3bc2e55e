import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { FetchLike } from "../src/api.js";
import type { PolicyView, SessionView } from "../src/types.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

export interface Exchange {
  method: string;
  path: string;
  body: string | null;
  status: number;
  response: SessionView;
}

export interface Flow {
  features: Record<string, number>;
  scores: Record<string, string>;
  exchanges: Exchange[];
}

export function loadPolicyFixture(): PolicyView {
  return JSON.parse(readFileSync(join(FIXTURES, "policy.json"), "utf-8"));
}

export function loadFlow(): Flow {
  return JSON.parse(readFileSync(join(FIXTURES, "flow.json"), "utf-8"));
}

export function loadTranscript(): string {
  return readFileSync(join(FIXTURES, "transcript.txt"), "utf-8");
}

export interface RecordedCall {
  method: string;
  url: string;
  body: string | null;
  responseBody: unknown;
}

/** Fetch stub replaying the recorded exchanges; every call is logged for
 * the traceability audit. POST bodies must match the recording byte for
 * byte. */
export function makeFetchStub(policy: PolicyView, flow: Flow) {
  const calls: RecordedCall[] = [];
  let cursor = 0;
  const stub: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const body = typeof init?.body === "string" ? init.body : null;
    let status = 200;
    let payload: unknown;
    if (method === "GET" && url === "/api/v1/policy") {
      payload = policy;
    } else if (method === "POST") {
      const expected = flow.exchanges[cursor];
      if (!expected) {
        throw new Error(`unexpected POST past the recording: ${url}`);
      }
      if (url !== expected.path) {
        throw new Error(`expected POST ${expected.path}, got ${url}`);
      }
      if (body !== expected.body) {
        throw new Error(
          `payload mismatch for ${url}:\n sent     ${body}\n recorded ${expected.body}`,
        );
      }
      status = expected.status;
      payload = expected.response;
      cursor += 1;
    } else {
      throw new Error(`unexpected request: ${method} ${url}`);
    }
    calls.push({ method, url, body, responseBody: payload });
    return new Response(JSON.stringify(payload), {
      status,
      headers: { "content-type": "application/json" },
    });
  };
  return { stub, calls };
}

export async function settle(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
  await new Promise((resolve) => setTimeout(resolve, 0));
}

export function fillIntake(root: HTMLElement, features: Record<string, number>): void {
  const form = root.querySelector("form.intake") as HTMLFormElement;
  for (const [name, value] of Object.entries(features)) {
    const field = form.elements.namedItem(name) as HTMLInputElement | HTMLSelectElement;
    field.value = String(value);
  }
}

export function submitIntake(root: HTMLElement): void {
  const form = root.querySelector("form.intake") as HTMLFormElement;
  form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
}

export function clickScore(root: HTMLElement, token: string): void {
  const buttons = Array.from(
    root.querySelectorAll<HTMLButtonElement>(".picker button.birads"),
  );
  const target = buttons.find((b) => b.textContent === token);
  if (!target) {
    throw new Error(`no picker button for ${token}`);
  }
  target.click();
}
