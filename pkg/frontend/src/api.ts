/** Typed client for the versioned session API.
 *
 * Every clinical value shown in the console flows through this module, so
 * tests can intercept `fetchImpl` and audit that nothing is computed
 * client-side.
 */

import type { ApiError, PolicyView, SessionView } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiRequestError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiError,
  ) {
    super(body.message);
  }
}

export class ApiClient {
  constructor(
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
    private readonly base: string = "",
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(`${this.base}/api/v1${path}`, init);
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiRequestError(response.status, payload as ApiError);
    }
    return payload as T;
  }

  getPolicy(): Promise<PolicyView> {
    return this.request<PolicyView>("GET", "/policy");
  }

  createSession(features: Record<string, number>): Promise<SessionView> {
    return this.request<SessionView>("POST", "/sessions", { features });
  }

  postOutcome(sessionId: string, test: string, birads: string): Promise<SessionView> {
    return this.request<SessionView>("POST", `/sessions/${sessionId}/outcomes`, {
      test,
      birads,
    });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request<SessionView>("GET", `/sessions/${sessionId}`);
  }
}
