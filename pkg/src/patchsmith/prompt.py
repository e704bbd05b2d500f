"""Augmented prompt construction and external-generator plumbing.

The engine can hand a repair location to an external text generator (any
command line tool reading the prompt on stdin and writing suggestions to
stdout, configured through REPAIR_LLM_CMD).  Everything here is deterministic
and offline-testable: the document builder, the reply parser, and the
two-round feedback loop; only invoke_external_generator touches a subprocess.
"""

from __future__ import annotations

import difflib
import os
import re
import subprocess
from dataclasses import dataclass, field

from .edits import (
    Delete,
    Edit,
    EditTarget,
    InsertAfter,
    Patch,
    Relationship,
    ReplaceStmt,
    patch_key,
)
from .exceptions import NoCandidates
from .interp import ExecutionTrace, StmtEnter, state_at
from .minilang import parse_statements
from .minilang.ast import Call, FunctionDecl, Program, iter_exprs, walk_block
from .minilang.printer import format_function, stmt_header
from .snapshot import (
    DebugSnapshot,
    LineShouldNotExecute,
    UnexpectedException,
    VariableWrongValue,
)
from .values import repr_value

PROMPT_CHAR_CAP = 16_000
TRACE_EXCERPT_STMTS = 50
MAX_FEEDBACK_ROUNDS = 2
ENV_GENERATOR_CMD = "REPAIR_LLM_CMD"
STRATEGY_LLM = "llm"


@dataclass
class PromptDocument:
    """Ordered sections; rendering is pure and capped at PROMPT_CHAR_CAP."""

    sections: list[tuple[str, str]] = field(default_factory=list)

    def render(self) -> str:
        parts = [f"## {title}\n{body}" for title, body in self.sections if body]
        return "\n\n".join(parts) + "\n"


def _problem_text(snapshot: DebugSnapshot) -> str:
    problem = snapshot.problem
    if problem is None:
        return "(no problem declared yet)"
    if isinstance(problem, UnexpectedException):
        return (f"An unexpected {problem.raise_kind} is raised at "
                f"{problem.function}:{problem.line}.")
    if isinstance(problem, LineShouldNotExecute):
        return f"Line {problem.line} of {problem.function} executes but never should."
    assert isinstance(problem, VariableWrongValue)
    text = (f"Variable '{problem.name}' in {problem.function} ends up holding "
            f"{repr_value(problem.bad_value)}, which is wrong")
    if problem.has_expected:
        text += f"; it should hold {repr_value(problem.expected)}"
    return text + "."


def _marked_function(program: Program, location) -> str:
    fn = program.function(location.function)
    lines = format_function(fn).splitlines()
    # the function body starts at the function's own first source line
    first_line = min((s.line for s in walk_block(fn.body)), default=1) - 1
    out = []
    for offset, text in enumerate(lines):
        line_no = first_line + offset
        mark = "   <-- candidate repair location" if line_no == location.line else ""
        out.append(f"{line_no:4d} | {text}{mark}")
    return "\n".join(out)


def _callee_definitions(program: Program, function: str) -> str:
    fn = program.function(function)
    callees: list[str] = []
    for stmt in walk_block(fn.body):
        for _, expr in iter_exprs(stmt):
            if isinstance(expr, Call) and expr.callee != function and expr.callee not in callees:
                callees.append(expr.callee)
    return "\n".join(format_function(program.function(c)) for c in callees
                     if program.has_function(c))


def _trace_excerpt(snapshot: DebugSnapshot, trace: ExecutionTrace,
                   limit: int = TRACE_EXCERPT_STMTS) -> list[str]:
    enters = [e for e in trace.events
              if isinstance(e, StmtEnter) and e.idx <= snapshot.stop_idx]
    lines = []
    for event in enters[-limit:]:
        frames = state_at(trace, event.idx)
        bindings = frames.get(event.frame_id, {})
        state = ", ".join(f"{k}={repr_value(v)}" for k, v in sorted(bindings.items()))
        lines.append(f"{event.function}:{event.line}  [{state}]")
    return lines


def _history_text(history: list[tuple[Patch, object]]) -> str:
    out = []
    for i, (patch, result) in enumerate(history, 1):
        edits = "; ".join(stmt_header_of_edit(e) for e in patch.edits)
        verdict = getattr(result, "patched_outcome", "") or "not validated"
        resolved = getattr(result, "resolved", False)
        note = "resolved the symptom" if resolved else f"did NOT resolve the symptom ({verdict})"
        similarity = getattr(result, "similarity", None)
        if similarity is not None:
            note += f"; trace similarity {similarity:.2f}"
        out.append(f"attempt {i}: {edits}\n  -> {note}")
    return "\n".join(out)


def stmt_header_of_edit(edit: Edit) -> str:
    from .edits import edit_key

    return edit_key(edit)


def build_prompt(
    snapshot: DebugSnapshot,
    trace: ExecutionTrace,
    location,
    history: list[tuple[Patch, object]] | None = None,
    guidance: str = "",
    program: Program | None = None,
) -> PromptDocument:
    """All prompt sections, deterministic, capped with the trace cut first."""
    if program is None:
        program = snapshot.program()
    entry = snapshot.entry
    entry_text = f"{entry.function}({', '.join(repr_value(a) for a in entry.args)})"

    excerpt_lines = _trace_excerpt(snapshot, trace)
    doc = PromptDocument()

    def assemble(excerpt: list[str]) -> PromptDocument:
        d = PromptDocument()
        d.sections.append(("Problem", _problem_text(snapshot)))
        d.sections.append((f"Buggy function ({location.function})",
                           _marked_function(program, location)))
        callees = _callee_definitions(program, location.function)
        if callees:
            d.sections.append(("Called functions", callees))
        d.sections.append(("Entry input", entry_text))
        d.sections.append(("Symptom", _problem_text(snapshot)))
        if excerpt:
            d.sections.append((f"Execution trace (last {len(excerpt)} statements, "
                               "with variable state)", "\n".join(excerpt)))
        if history:
            d.sections.append(("Prior repair attempts", _history_text(history)))
        if guidance:
            d.sections.append(("Developer guidance", guidance))
        d.sections.append((
            "Task",
            "Propose up to 3 corrected versions of the marked statement (or of the "
            "whole function) as fenced code blocks.",
        ))
        return d

    doc = assemble(excerpt_lines)
    while len(doc.render()) > PROMPT_CHAR_CAP and excerpt_lines:
        excerpt_lines = excerpt_lines[1:]  # drop oldest trace lines first
        doc = assemble(excerpt_lines)
    if len(doc.render()) > PROMPT_CHAR_CAP:
        # degenerate inputs: hard-cap the final section bodies
        rendered = doc.render()[:PROMPT_CHAR_CAP]
        doc = PromptDocument([("Prompt", rendered)])
    return doc


# --- reply parsing -----------------------------------------------------------------

_FENCE = re.compile(r"```[a-zA-Z0-9_-]*\n(.*?)```", re.DOTALL)


@dataclass
class ReplyParse:
    patches: list[Patch]
    diagnostics: list[str]


def parse_generator_reply(text: str, location, program: Program | None = None) -> ReplyParse:
    """Fenced code blocks -> edits at the location.

    A block holding one statement becomes a ReplaceStmt; several statements
    replace the target and insert the rest after it; a whole function
    declaration is diffed against the current one statement by statement.
    Blocks that parse as nothing are skipped with a diagnostic; if no block
    yields a patch, NoCandidates is raised.
    """
    patches: list[Patch] = []
    diagnostics: list[str] = []
    blocks = _FENCE.findall(text)
    for i, block in enumerate(blocks):
        snippet = block.strip()
        if not snippet:
            diagnostics.append(f"block {i}: empty")
            continue
        patch = None
        if snippet.startswith("fn ") and program is not None:
            patch, why = _function_reply(snippet, location, program)
            if patch is None:
                diagnostics.append(f"block {i}: {why}")
                continue
        else:
            try:
                stmts = parse_statements(snippet)
            except Exception as exc:
                diagnostics.append(f"block {i}: does not parse ({exc})")
                continue
            if not stmts:
                diagnostics.append(f"block {i}: no statements")
                continue
            from .genlocal import static_occurrence

            target = EditTarget(location.function, location.line,
                                static_occurrence(location))
            edits: list[Edit] = [Edit(target, ReplaceStmt(stmts[0]))]
            for extra in stmts[1:]:
                edits.append(Edit(target, InsertAfter(extra)))
            patch = Patch(
                edits, STRATEGY_LLM,
                Relationship.EOH if len(edits) > 1 else None,
                provenance=f"external suggestion block {i}",
            )
        patches.append(patch)
    if not patches:
        raise NoCandidates(
            "no code block in the reply parses as MiniLang"
            + (f" ({'; '.join(diagnostics)})" if diagnostics else "")
        )
    return ReplyParse(patches, diagnostics)


def _function_reply(snippet: str, location, program: Program) -> tuple[Patch | None, str]:
    from .minilang.parser import _Parser, tokenize

    try:
        parser = _Parser(tokenize(snippet))
        fn = parser.parse_function()
    except Exception as exc:
        return None, f"function does not parse ({exc})"
    if fn.name != location.function:
        return None, f"function '{fn.name}' is not the buggy one"
    old_fn = program.function(location.function)
    edits = _diff_blocks(location.function, old_fn, fn)
    if not edits:
        return None, "function is identical to the current one"
    rel = Relationship.EOH if len(edits) > 1 else None
    return Patch(edits, STRATEGY_LLM, rel, provenance="external function rewrite"), ""


def _diff_blocks(function: str, old_fn: FunctionDecl, new_fn: FunctionDecl) -> list[Edit]:
    from .minilang.printer import format_stmt

    old_texts = [format_stmt(s) for s in old_fn.body]
    new_texts = [format_stmt(s) for s in new_fn.body]
    matcher = difflib.SequenceMatcher(a=old_texts, b=new_texts, autojunk=False)
    edits: list[Edit] = []
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag == "equal":
            continue
        old_slice = old_fn.body[i1:i2]
        new_slice = new_fn.body[j1:j2]
        paired = min(len(old_slice), len(new_slice))
        for k in range(paired):
            target = EditTarget(function, old_slice[k].line)
            edits.append(Edit(target, ReplaceStmt(new_slice[k])))
        for extra in old_slice[paired:]:
            edits.append(Edit(EditTarget(function, extra.line), Delete()))
        if len(new_slice) > paired:
            anchor = old_slice[-1] if old_slice else (old_fn.body[i1 - 1] if i1 > 0 else old_fn.body[0])
            for extra in new_slice[paired:]:
                action = InsertAfter(extra) if (old_slice or i1 > 0) else ReplaceStmt(extra)
                edits.append(Edit(EditTarget(function, anchor.line), action))
    return edits


# --- external command adapter ---------------------------------------------------------

def external_generator_configured() -> bool:
    return bool(os.environ.get(ENV_GENERATOR_CMD, "").strip())


def invoke_external_generator(prompt_text: str, timeout: float = 60.0) -> str:
    """Pipe the prompt into the configured command; its stdout is the reply."""
    cmd = os.environ.get(ENV_GENERATOR_CMD, "").strip()
    if not cmd:
        return ""
    completed = subprocess.run(
        cmd, shell=True, input=prompt_text, capture_output=True, text=True,
        timeout=timeout,
    )
    return completed.stdout


def conversational_repair(
    snapshot: DebugSnapshot,
    trace: ExecutionTrace,
    program: Program,
    location,
    validate_candidate,
    guidance: str = "",
    rounds: int = MAX_FEEDBACK_ROUNDS,
) -> list[Patch]:
    """At most `rounds` prompt/validate exchanges with the external generator.

    `validate_candidate(patch)` returns a ValidationResult or None when the
    patch does not apply.  Silently a no-op when no generator is configured.
    """
    if not external_generator_configured():
        return []
    collected: list[Patch] = []
    seen: set[frozenset] = set()
    history: list[tuple[Patch, object]] = []
    for _ in range(max(1, rounds)):
        doc = build_prompt(snapshot, trace, location, history or None, guidance, program)
        reply = invoke_external_generator(doc.render())
        try:
            parsed = parse_generator_reply(reply, location, program)
        except NoCandidates:
            break
        round_resolved = False
        for patch in parsed.patches:
            key = patch_key(patch)
            if key in seen:
                continue
            seen.add(key)
            collected.append(patch)
            result = validate_candidate(patch)
            if result is not None:
                history.append((patch, result))
                round_resolved = round_resolved or getattr(result, "resolved", False)
        if round_resolved:
            break
    return collected
