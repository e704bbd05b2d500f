/**
 * End-to-end acceptance: drive the console's controller against a real
 * engine. Uploads a corpus snapshot, declares the symptom, runs repair,
 * previews the top diff, accepts — then re-checks the downloaded source with
 * the engine's verifier (symptom must be gone on a fresh run).
 */

import { execFile, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { SessionFlow } from "../src/flow.js";
import type { Problem } from "../src/model.js";

const run = promisify(execFile);
const PYTHON = process.env.PATCHSMITH_PYTHON ?? "python3";
const PORT = 8750 + Math.floor(Math.random() * 200);
const BASE = `http://127.0.0.1:${PORT}`;

let engine: ChildProcess;
let workDir: string;

async function engineReady(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/api/sessions/warmup-probe`);
      if (response.status === 404) return;
    } catch {
      /* not listening yet */
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error("engine did not come up");
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "console-e2e-"));
  await run(PYTHON, ["-m", "patchsmith.cli", "corpus", "export",
                     "su_missing_reset", "-o", join(workDir, "bug")],
            { cwd: ".." });
  engine = spawn(PYTHON, ["-m", "patchsmith.cli", "serve",
                          "--port", String(PORT),
                          "--data-dir", join(workDir, "sessions")],
                 { cwd: "..", stdio: "ignore" });
  await engineReady();
}, 60_000);

afterAll(() => {
  engine?.kill();
});

describe("console against a live engine", () => {
  it("runs the whole developer loop and the accepted source clears the symptom", async () => {
    const snapshotPath = join(workDir, "bug", "snapshot.json");
    const snapshot = JSON.parse(readFileSync(snapshotPath, "utf-8"));
    const problem = snapshot.problem as Problem;
    snapshot.problem = null;

    const flow = new SessionFlow(new ApiClient(BASE), 200);

    // upload -> stack panel shows the innermost frame from the snapshot file
    await flow.uploadSnapshot(snapshot);
    const summary = flow.state.summary!;
    expect(summary.status).toBe("New");
    expect(summary.stack[0]?.function).toBe("main");
    expect(summary.stack[0]?.bindings["total"]).toBe(36);

    // the trace inspector pages straight from the API
    const api = new ApiClient(BASE);
    const page = await api.tracePage(flow.state.sessionId!, 0, 10);
    expect(page.events.length).toBe(10);
    expect(page.total).toBeGreaterThan(10);

    // symptom form -> PUT problem
    await flow.declareProblem(problem);
    expect(flow.state.summary?.problem?.kind).toBe("variable_wrong_value");

    // repair with polling
    const done = await flow.runRepair();
    expect(done.status).toBe("Done");
    expect(flow.state.entries.length).toBeGreaterThan(0);
    const top = flow.state.entries[0]!;
    expect(top.validation.resolved).toBe(true);

    // preview the top diff (server-rendered, verbatim)
    const diff = await flow.selectPatch(top.patch_id);
    expect(diff.startsWith("--- a/program.ml0")).toBe(true);
    expect(diff).toContain("+");

    // accept -> downloadable source
    const source = await flow.acceptSelected();
    expect(source).toContain("fn main()");
    expect(flow.state.summary?.accepted).toBe(top.patch_id);

    // re-capture check: the engine confirms the symptom is gone
    const patchedPath = join(workDir, "patched.ml0");
    writeFileSync(patchedPath, source);
    const verify = await run(PYTHON, ["-m", "patchsmith.cli", "verify", patchedPath,
                                      "--entry", "main",
                                      "--problem", join(workDir, "bug", "problem.json")],
                             { cwd: ".." });
    expect(verify.stdout).toContain("symptom resolved");
  }, 120_000);

  it("reload reproduces the same view from API data alone", async () => {
    const snapshotPath = join(workDir, "bug", "snapshot.json");
    const snapshot = JSON.parse(readFileSync(snapshotPath, "utf-8"));

    const first = new SessionFlow(new ApiClient(BASE), 200);
    await first.uploadSnapshot(snapshot);
    const sessionId = first.state.sessionId!;

    const reloaded = new SessionFlow(new ApiClient(BASE), 200);
    await reloaded.openSession(sessionId);
    expect(reloaded.state.summary).toEqual(first.state.summary);
  }, 60_000);

  it("surfaces engine errors verbatim with their status", async () => {
    const api = new ApiClient(BASE);
    await expect(api.summary("does-not-exist")).rejects.toThrow(/404/);
    await expect(api.createSession({ version: 99 })).rejects.toThrow(/400/);
  }, 30_000);
});
