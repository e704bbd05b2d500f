/** The console's controller: every user action maps 1:1 to one API call, and
 * the whole view state is reconstructable from API responses alone (a page
 * reload with a known session id reproduces it). */

import { ApiClient } from "./api.js";
import type { PatchEntry, Problem, SessionSummary } from "./model.js";

export interface FlowState {
  sessionId: string | null;
  summary: SessionSummary | null;
  entries: PatchEntry[];
  selectedPatch: string | null;
  diff: string;
  acceptedSource: string | null;
  lastError: string;
}

const POLL_INTERVAL_MS = 500;

export class SessionFlow {
  state: FlowState = {
    sessionId: null,
    summary: null,
    entries: [],
    selectedPatch: null,
    diff: "",
    acceptedSource: null,
    lastError: "",
  };

  constructor(
    private readonly api: ApiClient,
    private readonly pollInterval: number = POLL_INTERVAL_MS,
  ) {}

  /** Upload a snapshot JSON document and open a session for it. */
  async uploadSnapshot(snapshot: unknown): Promise<void> {
    this.state.sessionId = await this.api.createSession(snapshot);
    await this.refresh();
  }

  /** Re-open an existing session (page reload path). */
  async openSession(sessionId: string): Promise<void> {
    this.state.sessionId = sessionId;
    await this.refresh();
  }

  async refresh(): Promise<void> {
    if (!this.state.sessionId) return;
    this.state.summary = await this.api.summary(this.state.sessionId);
    this.state.entries = this.state.summary.patch_count
      ? await this.api.patches(this.state.sessionId)
      : [];
  }

  async declareProblem(problem: Problem): Promise<void> {
    if (!this.state.sessionId) throw new Error("no session open");
    await this.api.setProblem(this.state.sessionId, problem);
    await this.refresh();
  }

  /** Start a repair run and poll until the engine leaves "Repairing". */
  async runRepair(timeoutMs = 120_000): Promise<SessionSummary> {
    if (!this.state.sessionId) throw new Error("no session open");
    await this.api.startRepair(this.state.sessionId);
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
      const summary = await this.api.summary(this.state.sessionId);
      if (!["Repairing", "Localized", "New"].includes(summary.status)) {
        await this.refresh();
        return summary;
      }
      await new Promise((resolve) => setTimeout(resolve, this.pollInterval));
    }
    throw new Error("repair did not finish in time");
  }

  /** Fetch the server-rendered diff for one ranked patch. */
  async selectPatch(patchId: string): Promise<string> {
    if (!this.state.sessionId) throw new Error("no session open");
    this.state.selectedPatch = patchId;
    this.state.diff = await this.api.preview(this.state.sessionId, patchId);
    return this.state.diff;
  }

  /** Accept the selected patch; the returned text is the downloadable file. */
  async acceptSelected(): Promise<string> {
    if (!this.state.sessionId || !this.state.selectedPatch) {
      throw new Error("no patch selected");
    }
    const source = await this.api.accept(this.state.sessionId, this.state.selectedPatch);
    this.state.acceptedSource = source;
    await this.refresh();
    return source;
  }
}
