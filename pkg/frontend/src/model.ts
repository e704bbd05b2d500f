/** Shared types mirroring the engine's API payloads, plus pure helpers.
 *
 * The console renders server data verbatim: diffs and scores are never
 * recomputed on the client.
 */

export type Value = number | boolean | string | Value[] | { unit: true };

export interface StackFrame {
  frame: number;
  function: string;
  line: number;
  bindings: Record<string, Value>;
}

export type Problem =
  | { kind: "unexpected_exception"; function: string; line: number; raise_kind: string }
  | { kind: "line_should_not_execute"; function: string; line: number }
  | { kind: "variable_wrong_value"; function: string; name: string;
      bad_value: Value; expected?: Value };

export interface SessionSummary {
  session_id: string;
  status: string;
  error: string;
  entry: { function: string; args: Value[] };
  stop_idx: number;
  outcome: string;
  program_source: string;
  stack: StackFrame[];
  problem: Problem | null;
  accepted: string | null;
  patch_count: number;
  history_rounds: number;
}

export interface Validation {
  resolved: boolean;
  clean_completion: boolean;
  output_match: boolean;
  similarity: number;
  size_penalty: number;
  score: number;
  patched_outcome: string;
}

export interface PatchEntry {
  patch_id: string;
  patch: {
    strategy: string;
    relationship: string | null;
    provenance: string;
    edits: unknown[];
  };
  validation: Validation;
}

export interface TracePage {
  from: number;
  total: number;
  outcome: string;
  step_count: number;
  events: Record<string, unknown>[];
}

/** Render a MiniLang value the way the engine prints it. */
export function formatValue(value: Value): string {
  if (typeof value === "boolean") return value ? "true" : "false";
  if (typeof value === "number") return String(value);
  if (typeof value === "string") return JSON.stringify(value);
  if (Array.isArray(value)) return "[" + value.map(formatValue).join(", ") + "]";
  return "unit";
}

/** Client-side mirror of the engine's problem invariants. Returns an error
 * message, or null when the form state is submittable. */
export function problemFormError(problem: Problem): string | null {
  if (!problem.function.trim()) return "function name is required";
  if (problem.kind === "unexpected_exception") {
    if (!problem.raise_kind.trim()) return "failure kind is required";
    if (!Number.isInteger(problem.line) || problem.line < 1) return "line must be a positive integer";
    return null;
  }
  if (problem.kind === "line_should_not_execute") {
    if (!Number.isInteger(problem.line) || problem.line < 1) return "line must be a positive integer";
    return null;
  }
  if (!problem.name.trim()) return "variable name is required";
  if (problem.expected !== undefined &&
      JSON.stringify(problem.expected) === JSON.stringify(problem.bad_value)) {
    return "expected value must differ from the wrong value";
  }
  return null;
}

/** Parse a literal typed into the value fields of the symptom form. */
export function parseValueLiteral(text: string): Value {
  const trimmed = text.trim();
  if (trimmed === "true") return true;
  if (trimmed === "false") return false;
  if (trimmed === "unit") return { unit: true };
  if (/^-?\d+$/.test(trimmed)) return Number(trimmed);
  if (trimmed.startsWith('"') || trimmed.startsWith("[")) {
    return JSON.parse(trimmed) as Value;
  }
  throw new Error(`not a value literal: ${text}`);
}

export type DiffLineKind = "add" | "del" | "hunk" | "meta" | "ctx";

/** Classification for syntax coloring only; the diff text stays verbatim. */
export function classifyDiffLine(line: string): DiffLineKind {
  if (line.startsWith("+++") || line.startsWith("---")) return "meta";
  if (line.startsWith("@@")) return "hunk";
  if (line.startsWith("+")) return "add";
  if (line.startsWith("-")) return "del";
  return "ctx";
}

/** Short human text for one ranked entry's score components. */
export function describeValidation(v: Validation): string {
  const parts = [
    `score ${v.score}`,
    v.resolved ? "resolves the symptom" : "does NOT resolve",
    v.clean_completion ? "completes cleanly" : `run: ${v.patched_outcome}`,
    `output ${v.output_match ? "preserved" : "differs"}`,
    `similarity ${(v.similarity * 100).toFixed(0)}%`,
    `size ${v.size_penalty}`,
  ];
  return parts.join(" · ");
}

export function statusBadge(status: string): string {
  switch (status) {
    case "Done": return "ok";
    case "Failed": return "err";
    case "Repairing": return "busy";
    default: return "idle";
  }
}
