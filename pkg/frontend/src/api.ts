/** Thin typed client over the engine's HTTP API. */

import type { PatchEntry, Problem, SessionSummary, TracePage } from "./model.js";

export class ApiError extends Error {
  constructor(readonly status: number, readonly detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(method: string, path: string, body?: unknown): Promise<Response> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
      init.headers = { "Content-Type": "application/json" };
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const payload = (await response.json()) as { detail?: string; error?: string };
        detail = payload.detail ?? payload.error ?? detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, detail);
    }
    return response;
  }

  async createSession(snapshot: unknown): Promise<string> {
    const response = await this.request("POST", "/api/sessions", snapshot);
    const payload = (await response.json()) as { session_id: string };
    return payload.session_id;
  }

  async summary(sessionId: string): Promise<SessionSummary> {
    const response = await this.request("GET", `/api/sessions/${sessionId}`);
    return (await response.json()) as SessionSummary;
  }

  async tracePage(sessionId: string, start: number, count: number): Promise<TracePage> {
    const response = await this.request(
      "GET", `/api/sessions/${sessionId}/trace?from=${start}&count=${count}`);
    return (await response.json()) as TracePage;
  }

  async setProblem(sessionId: string, problem: Problem): Promise<void> {
    await this.request("PUT", `/api/sessions/${sessionId}/problem`, problem);
  }

  async startRepair(sessionId: string): Promise<void> {
    await this.request("POST", `/api/sessions/${sessionId}/repair`);
  }

  async patches(sessionId: string): Promise<PatchEntry[]> {
    const response = await this.request("GET", `/api/sessions/${sessionId}/patches`);
    const payload = (await response.json()) as { entries: PatchEntry[] };
    return payload.entries;
  }

  async preview(sessionId: string, patchId: string): Promise<string> {
    const response = await this.request(
      "GET", `/api/sessions/${sessionId}/patches/${patchId}/preview`);
    return response.text();
  }

  async accept(sessionId: string, patchId: string): Promise<string> {
    const response = await this.request(
      "POST", `/api/sessions/${sessionId}/patches/${patchId}/accept`);
    return response.text();
  }
}
