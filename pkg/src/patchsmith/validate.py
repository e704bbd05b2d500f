"""Patch validation by simulated-trace comparison, and ranking.

A candidate is applied, the patched program is executed from the snapshot's
entry call, and the two traces are compared with respect to the declared
problem.  The resolution gate is worth more than every other score component
combined, so a symptom-resolving patch always outranks a non-resolving one.

Because edits shift line numbers, the problem location is carried into the
patched program through the patch's line map before the gate is checked, and
the patched projection is mapped back to original coordinates before the
similarity comparison.  Inserted statements get a synthetic coordinate that
never matches.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .edits import AppliedPatch, Patch, apply_patch_detailed
from .edits import apply_patch as apply_patch  # re-exported engine surface
from .exceptions import ApplyError
from .interp import (
    ExecutionTrace,
    Out,
    Raise,
    RuntimeLimits,
    StmtEnter,
    VarWrite,
    execute,
    frame_functions,
)
from .minilang.ast import Program
from .minilang.parser import tokenize
from .minilang.printer import format_expr, format_stmt
from .minilang.ast import get_expr
from .snapshot import (
    DebugSnapshot,
    LineShouldNotExecute,
    ProblemSpec,
    UnexpectedException,
    VariableWrongValue,
)
from .values import values_equal

SIZE_PENALTY_CAP = 500
LCS_WINDOW_THRESHOLD = 10_000
DEFAULT_TOP_K = 5


@dataclass
class ValidationResult:
    resolved: bool
    clean_completion: bool
    output_match: bool
    similarity: float
    size_penalty: int
    score: int
    patched_outcome: str = ""  # informational: what the patched run did


@dataclass
class RankedPatchList:
    entries: list[tuple[Patch, ValidationResult]]
    k: int = DEFAULT_TOP_K


def compute_score(resolved: bool, clean_completion: bool, output_match: bool,
                  similarity: float, size_penalty: int) -> int:
    return (1000 * int(resolved) + 100 * int(clean_completion)
            + 50 * int(output_match) + round(100 * similarity) - size_penalty)


# --- symptom gate ---------------------------------------------------------------

def symptom_resolved(problem: ProblemSpec, patched_trace: ExecutionTrace) -> bool:
    """Does the patched run no longer exhibit the declared symptom?

    A budget-exceeded run never resolves anything.
    """
    if patched_trace.outcome.kind == "budget_exceeded":
        return False
    if isinstance(problem, UnexpectedException):
        return not any(
            isinstance(e, Raise) and e.kind == problem.raise_kind
            and e.function == problem.function and e.line == problem.line
            for e in patched_trace.events
        )
    if isinstance(problem, LineShouldNotExecute):
        return not any(
            isinstance(e, StmtEnter) and e.function == problem.function
            and e.line == problem.line
            for e in patched_trace.events
        )
    functions = frame_functions(patched_trace)
    last_value = None
    seen = False
    for event in patched_trace.events:
        if (isinstance(event, VarWrite) and event.name == problem.name
                and functions.get(event.frame_id) == problem.function):
            last_value = event.value
            seen = True
    if not seen:
        return False  # the variable vanished; nothing was demonstrably fixed
    if values_equal(last_value, problem.bad_value):
        return False
    if problem.has_expected and not values_equal(last_value, problem.expected):
        return False
    return True


def remap_problem(problem: ProblemSpec, applied: AppliedPatch) -> ProblemSpec | None:
    """Problem restated in the patched program's line coordinates.

    None when the referenced statement no longer exists.
    """
    if isinstance(problem, (UnexpectedException, LineShouldNotExecute)):
        new_line = applied.map_line(problem.function, problem.line)
        if new_line is None:
            return None
        return replace(problem, line=new_line)
    return problem


def _resolved_with_target_gone(problem: ProblemSpec, patched_trace: ExecutionTrace) -> bool:
    if patched_trace.outcome.kind == "budget_exceeded":
        return False
    if isinstance(problem, UnexpectedException):
        # the raising statement is gone; require the failure kind gone from
        # the whole function so a line shift cannot mask it
        return not any(
            isinstance(e, Raise) and e.kind == problem.raise_kind
            and e.function == problem.function
            for e in patched_trace.events
        )
    if isinstance(problem, LineShouldNotExecute):
        return True  # the statement cannot execute if it no longer exists
    return symptom_resolved(problem, patched_trace)


# --- trace similarity -------------------------------------------------------------

def _projection(trace: ExecutionTrace) -> list[tuple[str, int]]:
    return [(e.function, e.line) for e in trace.events if isinstance(e, StmtEnter)]


def lcs_length(a: list, b: list) -> int:
    """Exact LCS length: common prefix/suffix stripped, then a bit-parallel
    row sweep (each DP row is one big-integer update)."""
    lo = 0
    while lo < len(a) and lo < len(b) and a[lo] == b[lo]:
        lo += 1
    hi = 0
    while (hi < len(a) - lo and hi < len(b) - lo
           and a[len(a) - 1 - hi] == b[len(b) - 1 - hi]):
        hi += 1
    mid_a = a[lo: len(a) - hi]
    mid_b = b[lo: len(b) - hi]
    if not mid_a or not mid_b:
        return lo + hi
    m = len(mid_b)
    match: dict = {}
    for j, y in enumerate(mid_b):
        match[y] = match.get(y, 0) | (1 << j)
    mask = (1 << m) - 1
    v = mask
    for x in mid_a:
        pm = match.get(x, 0)
        tmp = v & pm
        v = ((v + tmp) | (v - tmp)) & mask
    return lo + hi + m - v.bit_count()


def sequence_similarity(a: list, b: list) -> float:
    """LCS length over the longer length; identical sequences give 1.0."""
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    if max(len(a), len(b)) > LCS_WINDOW_THRESHOLD:
        d = 0
        limit = min(len(a), len(b))
        while d < limit and a[d] == b[d]:
            d += 1
        start = max(0, d - 100)
        end = d + 900
        a = a[start:end]
        b = b[start:end]
        if not a and not b:
            return 1.0
        if not a or not b:
            return 0.0
    return lcs_length(a, b) / max(len(a), len(b))


def trace_similarity(original: ExecutionTrace, patched: ExecutionTrace) -> float:
    return sequence_similarity(_projection(original), _projection(patched))


# --- size penalty ------------------------------------------------------------------

def _tokens(text: str) -> list[str]:
    return [t.text for t in tokenize(text) if t.kind != "eof"]


def _token_diff(old: list[str], new: list[str]) -> int:
    import difflib

    matcher = difflib.SequenceMatcher(a=old, b=new, autojunk=False)
    changed = 0
    for tag, i1, i2, j1, j2 in matcher.get_opcodes():
        if tag != "equal":
            changed += (i2 - i1) + (j2 - j1)
    return changed


def size_penalty_of(program: Program, patch: Patch) -> int:
    """edit count * 10 + changed-token count, capped to preserve gate dominance."""
    from .edits import Delete, InsertAfter, InsertBefore, ReplaceExpr, ReplaceStmt, WrapIf
    from .edits import _resolve  # targeted statement lookup

    total = len(patch.edits) * 10
    for edit in patch.edits:
        action = edit.action
        try:
            block, index = _resolve(program, edit.target)
            old_stmt = block[index]
        except Exception:
            old_stmt = None
        if isinstance(action, ReplaceExpr):
            old_txt = format_expr(get_expr(old_stmt, action.path)) if old_stmt else ""
            total += _token_diff(_tokens(old_txt), _tokens(format_expr(action.new_expr)))
        elif isinstance(action, ReplaceStmt):
            old_txt = format_stmt(old_stmt) if old_stmt else ""
            total += _token_diff(_tokens(old_txt), _tokens(format_stmt(action.new_stmt)))
        elif isinstance(action, (InsertBefore, InsertAfter)):
            total += len(_tokens(format_stmt(action.new_stmt)))
        elif isinstance(action, Delete):
            total += len(_tokens(format_stmt(old_stmt))) if old_stmt else 10
        elif isinstance(action, WrapIf):
            total += len(_tokens(format_expr(action.guard))) + 6  # if ( ) { } braces
    return min(total, SIZE_PENALTY_CAP)


# --- validation ------------------------------------------------------------------------

def _outcome_text(trace: ExecutionTrace) -> str:
    outcome = trace.outcome
    if outcome.is_completed:
        return "completed"
    if outcome.is_raised:
        final = trace.final_raise()
        where = f"{final.function}:{final.line}" if final else f"line {outcome.line}"
        return f"raised {outcome.raise_kind} at {where}"
    return "budget exceeded"


def validate(
    snapshot: DebugSnapshot,
    patch: Patch,
    limits: RuntimeLimits | None = None,
    original_trace: ExecutionTrace | None = None,
    program: Program | None = None,
) -> ValidationResult:
    """Apply, simulate, gate, and score one candidate patch."""
    if program is None:
        program = snapshot.program()
    if original_trace is None:
        original_trace = execute(program, snapshot.entry, snapshot.limits)
    applied = apply_patch_detailed(program, patch)  # ApplyError propagates
    patched_trace = execute(applied.program, snapshot.entry, limits or snapshot.limits)

    problem = snapshot.problem
    if problem is None:
        resolved = False
    else:
        mapped = remap_problem(problem, applied)
        if mapped is None:
            resolved = _resolved_with_target_gone(problem, patched_trace)
        else:
            resolved = symptom_resolved(mapped, patched_trace)

    clean = patched_trace.outcome.is_completed

    original_outs = [e.text for e in original_trace.events
                     if isinstance(e, Out) and e.idx < snapshot.stop_idx]
    patched_outs = [e.text for e in patched_trace.events if isinstance(e, Out)]
    output_match = patched_outs[: len(original_outs)] == original_outs

    reverse = applied.reverse_line_map()
    patched_projection = []
    for fn, line in _projection(patched_trace):
        key = (fn, line)
        patched_projection.append(
            (fn, reverse[key]) if key in reverse else (fn, line + 1_000_000)
        )
    similarity = sequence_similarity(_projection(original_trace), patched_projection)

    penalty = size_penalty_of(program, patch)
    score = compute_score(resolved, clean, output_match, similarity, penalty)
    return ValidationResult(resolved, clean, output_match, similarity, penalty, score,
                            _outcome_text(patched_trace))


def rank(results: list[tuple[Patch, ValidationResult]], k: int = DEFAULT_TOP_K) -> RankedPatchList:
    """Resolved candidates only, best score first, truncated to k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    resolved = [(p, r) for p, r in results if r.resolved]
    resolved.sort(key=lambda pr: (-pr[1].score, pr[1].size_penalty, pr[0].strategy))
    return RankedPatchList(resolved[:k], k)
