/** DOM wiring for the console. All rendering works off FlowState, so a
 * reload with ?session=<id> rebuilds the identical view from the API. */

import { ApiClient, ApiError } from "./api.js";
import { SessionFlow } from "./flow.js";
import {
  Problem,
  classifyDiffLine,
  describeValidation,
  formatValue,
  parseValueLiteral,
  problemFormError,
  statusBadge,
} from "./model.js";

const baseUrl = (window.localStorage.getItem("patchsmith-base") ?? "").replace(/\/$/, "");
const api = new ApiClient(baseUrl);
const flow = new SessionFlow(api);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function showError(message: string): void {
  flow.state.lastError = message;
  const banner = el<HTMLDivElement>("error-banner");
  banner.textContent = message;
  banner.hidden = !message;
}

function badge(status: string): string {
  return `<span class="badge ${statusBadge(status)}">${status}</span>`;
}

async function guard<T>(action: () => Promise<T>): Promise<T | undefined> {
  try {
    showError("");
    return await action();
  } catch (err) {
    if (err instanceof ApiError) showError(`${err.status}: ${err.detail}`);
    else showError(String(err));
    return undefined;
  }
}

function render(): void {
  const { summary, entries, selectedPatch, diff, acceptedSource } = flow.state;
  el<HTMLDivElement>("session-panel").hidden = summary === null;
  if (!summary) return;

  el<HTMLDivElement>("session-head").innerHTML =
    `session <code>${summary.session_id}</code> ${badge(summary.status)}` +
    (summary.error ? ` <span class="err-text">${summary.error}</span>` : "");
  el<HTMLDivElement>("entry-line").textContent =
    `${summary.entry.function}(${summary.entry.args.map(formatValue).join(", ")})` +
    ` — run ${summary.outcome}, stopped at event ${summary.stop_idx}`;

  const stack = el<HTMLTableSectionElement>("stack-body");
  stack.innerHTML = "";
  for (const frame of summary.stack) {
    const row = stack.insertRow();
    row.insertCell().textContent = `#${frame.frame}`;
    row.insertCell().textContent = `${frame.function}:${frame.line}`;
    row.insertCell().textContent = Object.entries(frame.bindings)
      .map(([name, value]) => `${name} = ${formatValue(value)}`).join(", ");
  }

  el<HTMLPreElement>("source-view").textContent = summary.program_source;
  el<HTMLDivElement>("problem-view").textContent = summary.problem
    ? JSON.stringify(summary.problem)
    : "(no problem declared yet)";

  const list = el<HTMLDivElement>("patch-list");
  list.innerHTML = "";
  if (summary.status === "Done" && entries.length === 0) {
    list.textContent = "no suggestion — the engine found no symptom-resolving patch";
  }
  for (const entry of entries) {
    const item = document.createElement("div");
    item.className = "patch-item" + (entry.patch_id === selectedPatch ? " selected" : "");
    const relationship = entry.patch.relationship ? ` [${entry.patch.relationship}]` : "";
    item.innerHTML =
      `<div class="patch-title"><strong>${entry.patch_id}</strong> ` +
      `${entry.patch.strategy}${relationship}` +
      (summary.accepted === entry.patch_id ? " ✓ accepted" : "") + `</div>` +
      `<div class="patch-score">${describeValidation(entry.validation)}</div>` +
      `<div class="patch-prov">${entry.patch.provenance}</div>`;
    item.addEventListener("click", () => {
      void guard(() => flow.selectPatch(entry.patch_id)).then(render);
    });
    list.appendChild(item);
  }

  const diffView = el<HTMLPreElement>("diff-view");
  diffView.innerHTML = "";
  for (const line of diff.split("\n")) {
    const span = document.createElement("span");
    span.className = `diff-${classifyDiffLine(line)}`;
    span.textContent = line + "\n";
    diffView.appendChild(span);
  }

  const acceptButton = el<HTMLButtonElement>("accept-button");
  acceptButton.disabled = !selectedPatch || summary.accepted !== null;
  el<HTMLAnchorElement>("download-link").hidden = acceptedSource === null;
}

async function loadTrace(): Promise<void> {
  if (!flow.state.sessionId) return;
  const start = Number(el<HTMLInputElement>("trace-start").value || "0");
  const page = await api.tracePage(flow.state.sessionId, start, 50);
  el<HTMLDivElement>("trace-meta").textContent =
    `events ${page.from}..${page.from + page.events.length - 1} of ${page.total}` +
    ` — ${page.outcome}, ${page.step_count} steps`;
  el<HTMLPreElement>("trace-view").textContent =
    page.events.map((event) => JSON.stringify(event)).join("\n");
}

function problemFromForm(): Problem {
  const kind = el<HTMLSelectElement>("problem-kind").value;
  const fn = el<HTMLInputElement>("problem-function").value.trim();
  if (kind === "unexpected_exception") {
    return { kind, function: fn,
             line: Number(el<HTMLInputElement>("problem-line").value),
             raise_kind: el<HTMLInputElement>("problem-raise-kind").value.trim() };
  }
  if (kind === "line_should_not_execute") {
    return { kind, function: fn,
             line: Number(el<HTMLInputElement>("problem-line").value) };
  }
  const expectedText = el<HTMLInputElement>("problem-expected").value.trim();
  const problem: Problem = {
    kind: "variable_wrong_value",
    function: fn,
    name: el<HTMLInputElement>("problem-variable").value.trim(),
    bad_value: parseValueLiteral(el<HTMLInputElement>("problem-bad").value),
  };
  if (expectedText) problem.expected = parseValueLiteral(expectedText);
  return problem;
}

function wire(): void {
  el<HTMLSelectElement>("problem-kind").addEventListener("change", () => {
    const kind = el<HTMLSelectElement>("problem-kind").value;
    el<HTMLDivElement>("line-fields").hidden = kind === "variable_wrong_value";
    el<HTMLDivElement>("exception-fields").hidden = kind !== "unexpected_exception";
    el<HTMLDivElement>("variable-fields").hidden = kind !== "variable_wrong_value";
  });

  el<HTMLInputElement>("snapshot-file").addEventListener("change", (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    void file.text().then((text) =>
      guard(async () => {
        await flow.uploadSnapshot(JSON.parse(text));
        await loadTrace();
        render();
      }));
  });

  el<HTMLButtonElement>("problem-submit").addEventListener("click", () => {
    void guard(async () => {
      let problem: Problem;
      try {
        problem = problemFromForm();
      } catch (err) {
        showError(String(err));
        return;
      }
      const invalid = problemFormError(problem);
      if (invalid) {
        showError(invalid);
        return;
      }
      await flow.declareProblem(problem);
      render();
    });
  });

  el<HTMLButtonElement>("repair-button").addEventListener("click", () => {
    const button = el<HTMLButtonElement>("repair-button");
    button.disabled = true;
    void guard(async () => {
      render();
      await flow.runRepair();
    }).finally(() => {
      button.disabled = false;
      render();
    });
  });

  el<HTMLButtonElement>("trace-load").addEventListener("click", () => {
    void guard(loadTrace);
  });

  el<HTMLButtonElement>("accept-button").addEventListener("click", () => {
    void guard(async () => {
      const source = await flow.acceptSelected();
      const link = el<HTMLAnchorElement>("download-link");
      link.href = URL.createObjectURL(new Blob([source], { type: "text/plain" }));
      link.download = "patched.ml0";
      render();
    });
  });

  const fromUrl = new URLSearchParams(window.location.search).get("session");
  if (fromUrl) {
    void guard(async () => {
      await flow.openSession(fromUrl);
      await loadTrace();
      render();
    });
  }
}

wire();
render();
