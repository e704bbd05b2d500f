"""Debug snapshots and problem specifications.

A DebugSnapshot freezes one failing run: source, entry call, the event index
where the developer stopped, the reconstructed stack, and the declared
problem.  Snapshots are the contract between CLI, HTTP service, and UI, stored
as versioned JSON (docs/snapshot.md).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Union

from .exceptions import (
    NoFailure,
    SchemaError,
    SnapshotInconsistent,
    SnapshotIoError,
    StopNotReached,
)
from .interp import (
    EntryCall,
    ExecutionTrace,
    Raise,
    RuntimeLimits,
    StmtEnter,
    execute,
    frame_functions,
    live_frames_at,
    state_at,
)
from .minilang import ast, parse, pretty_print
from .minilang.ast import Program
from .values import Value, from_json, to_json, values_equal

SNAPSHOT_VERSION = 1


# --- problem specifications ----------------------------------------------------

@dataclass
class UnexpectedException:
    function: str
    line: int
    raise_kind: str


@dataclass
class LineShouldNotExecute:
    function: str
    line: int


@dataclass
class VariableWrongValue:
    function: str
    name: str
    bad_value: Value
    expected: Value = None  # None = "only asserts what the variable must NOT hold"
    has_expected: bool = False


ProblemSpec = Union[UnexpectedException, LineShouldNotExecute, VariableWrongValue]


def problem_to_json(problem: ProblemSpec) -> dict:
    if isinstance(problem, UnexpectedException):
        return {"kind": "unexpected_exception", "function": problem.function,
                "line": problem.line, "raise_kind": problem.raise_kind}
    if isinstance(problem, LineShouldNotExecute):
        return {"kind": "line_should_not_execute", "function": problem.function,
                "line": problem.line}
    if isinstance(problem, VariableWrongValue):
        rec = {"kind": "variable_wrong_value", "function": problem.function,
               "name": problem.name, "bad_value": to_json(problem.bad_value)}
        if problem.has_expected:
            rec["expected"] = to_json(problem.expected)
        return rec
    raise SchemaError(f"not a problem spec: {problem!r}")


def problem_from_json(rec: dict) -> ProblemSpec:
    try:
        kind = rec["kind"]
        if kind == "unexpected_exception":
            return UnexpectedException(rec["function"], rec["line"], rec["raise_kind"])
        if kind == "line_should_not_execute":
            return LineShouldNotExecute(rec["function"], rec["line"])
        if kind == "variable_wrong_value":
            has_expected = "expected" in rec
            return VariableWrongValue(
                rec["function"], rec["name"], from_json(rec["bad_value"]),
                from_json(rec["expected"]) if has_expected else None, has_expected,
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed problem record: {exc}") from exc
    raise SchemaError(f"unknown problem kind {rec.get('kind')!r}")


def _function_variable_names(program: Program, function: str) -> set[str]:
    fn = program.function(function)
    names = set(fn.params)
    for stmt in ast.walk_block(fn.body):
        names.update(ast.stmt_writes(stmt))
    return names


def validate_problem(problem: ProblemSpec, program: Program) -> None:
    """Check that the problem references locations that exist in the program."""
    if not program.has_function(problem.function):
        raise SchemaError(f"problem references unknown function '{problem.function}'")
    if isinstance(problem, (UnexpectedException, LineShouldNotExecute)):
        if not ast.locate(program, problem.function, problem.line):
            raise SchemaError(
                f"problem references line {problem.line} of '{problem.function}', "
                "which holds no statement"
            )
    elif isinstance(problem, VariableWrongValue):
        if problem.name not in _function_variable_names(program, problem.function):
            raise SchemaError(
                f"'{problem.name}' is not a variable of function '{problem.function}'"
            )
        if problem.has_expected and values_equal(problem.bad_value, problem.expected):
            raise SchemaError("bad_value must differ from expected value")


# --- snapshot ---------------------------------------------------------------------

@dataclass
class StackFrameInfo:
    frame_id: int
    function: str
    current_line: int
    bindings: dict[str, Value]


@dataclass
class DebugSnapshot:
    program_source: str
    entry: EntryCall
    stop_idx: int
    stack: list[StackFrameInfo]  # innermost first
    problem: ProblemSpec | None = None
    limits: RuntimeLimits = field(default_factory=RuntimeLimits)

    def program(self) -> Program:
        return parse(self.program_source)

    def with_problem(self, problem: ProblemSpec) -> "DebugSnapshot":
        validate_problem(problem, self.program())
        return replace(self, problem=problem)


# --- capture ------------------------------------------------------------------------

@dataclass(frozen=True)
class AtRaise:
    pass


@dataclass(frozen=True)
class AtEvent:
    idx: int


@dataclass(frozen=True)
class AtLineOccurrence:
    function: str
    line: int
    k: int = 0  # 0-based occurrence


StopRule = Union[AtRaise, AtEvent, AtLineOccurrence]


def _stop_index(trace: ExecutionTrace, rule: StopRule) -> int:
    if isinstance(rule, AtRaise):
        for event in trace.events:
            if isinstance(event, Raise):
                return event.idx
        raise StopNotReached("the run never raised")
    if isinstance(rule, AtEvent):
        if not 0 <= rule.idx < len(trace.events):
            raise StopNotReached(f"event {rule.idx} out of range 0..{len(trace.events) - 1}")
        return rule.idx
    seen = 0
    for event in trace.events:
        if isinstance(event, StmtEnter) and event.function == rule.function and event.line == rule.line:
            if seen == rule.k:
                return event.idx
            seen += 1
    raise StopNotReached(
        f"occurrence {rule.k} of {rule.function}:{rule.line} never executed"
    )


def _build_stack(trace: ExecutionTrace, stop_idx: int) -> list[StackFrameInfo]:
    functions = frame_functions(trace)
    bindings = state_at(trace, stop_idx)
    lines: dict[int, int] = {}
    for event in trace.events[: stop_idx + 1]:
        if isinstance(event, (StmtEnter, Raise)):
            lines[event.frame_id] = event.line
    stack = []
    for frame_id in live_frames_at(trace, stop_idx):
        stack.append(StackFrameInfo(
            frame_id=frame_id,
            function=functions.get(frame_id, ""),
            current_line=lines.get(frame_id, 0),
            bindings=dict(bindings.get(frame_id, {})),
        ))
    return stack


def capture(
    source: str | Program,
    entry: EntryCall,
    limits: RuntimeLimits = RuntimeLimits(),
    stop_rule: StopRule = AtRaise(),
) -> DebugSnapshot:
    """Execute once and freeze the moment selected by `stop_rule`.

    The stored source is canonical text, so re-executing the snapshot
    reproduces the exact trace the stack was reconstructed from.  The problem
    field is left unset for the developer (or derive_symptom) to fill.
    """
    text = source if isinstance(source, str) else pretty_print(source)
    program = parse(text)
    trace = execute(program, entry, limits)
    stop_idx = _stop_index(trace, stop_rule)
    return DebugSnapshot(
        program_source=text,
        entry=entry,
        stop_idx=stop_idx,
        stack=_build_stack(trace, stop_idx),
        problem=None,
        limits=limits,
    )


def derive_symptom(trace: ExecutionTrace) -> UnexpectedException:
    """The follow-up symptom of a failing run: its final raise."""
    if not trace.outcome.is_raised:
        raise NoFailure(f"trace outcome is {trace.outcome.kind}, not raised")
    final = trace.final_raise()
    assert final is not None
    return UnexpectedException(final.function, final.line, final.kind)


def verify_consistency(snapshot: DebugSnapshot) -> ExecutionTrace:
    """Re-execute and check the stored stack matches; returns the trace."""
    trace = execute(snapshot.program(), snapshot.entry, snapshot.limits)
    if snapshot.stop_idx >= len(trace.events):
        raise SnapshotInconsistent(
            f"stop_idx {snapshot.stop_idx} beyond trace end ({len(trace.events)} events)"
        )
    fresh = _build_stack(trace, snapshot.stop_idx)
    if len(fresh) != len(snapshot.stack):
        raise SnapshotInconsistent("stack depth differs on re-execution")
    for got, stored in zip(fresh, snapshot.stack):
        if (got.frame_id, got.function, got.current_line) != (
            stored.frame_id, stored.function, stored.current_line
        ):
            raise SnapshotInconsistent(
                f"frame {stored.frame_id} mismatch on re-execution"
            )
        if set(got.bindings) != set(stored.bindings) or not all(
            values_equal(got.bindings[k], stored.bindings[k]) for k in got.bindings
        ):
            raise SnapshotInconsistent(
                f"bindings of frame {stored.frame_id} differ on re-execution"
            )
    return trace


# --- serialization ---------------------------------------------------------------------

def snapshot_to_json(snapshot: DebugSnapshot) -> dict:
    return {
        "version": SNAPSHOT_VERSION,
        "program_source": snapshot.program_source,
        "entry": {"function": snapshot.entry.function,
                  "args": [to_json(a) for a in snapshot.entry.args]},
        "stop_idx": snapshot.stop_idx,
        "stack": [
            {"frame": f.frame_id, "function": f.function, "line": f.current_line,
             "bindings": {k: to_json(v) for k, v in f.bindings.items()}}
            for f in snapshot.stack
        ],
        "problem": problem_to_json(snapshot.problem) if snapshot.problem else None,
        "limits": {"step_budget": snapshot.limits.step_budget,
                   "max_trace_events": snapshot.limits.max_trace_events,
                   "max_call_depth": snapshot.limits.max_call_depth},
    }


def snapshot_from_json(data: dict) -> DebugSnapshot:
    if not isinstance(data, dict):
        raise SchemaError("snapshot must be a JSON object")
    version = data.get("version")
    if version != SNAPSHOT_VERSION:
        raise SchemaError(f"unsupported snapshot version {version!r} (supported: {SNAPSHOT_VERSION})")
    try:
        source = data["program_source"]
        entry = EntryCall(data["entry"]["function"],
                          tuple(from_json(a) for a in data["entry"]["args"]))
        stop_idx = data["stop_idx"]
        stack = [
            StackFrameInfo(f["frame"], f["function"], f["line"],
                           {k: from_json(v) for k, v in f["bindings"].items()})
            for f in data["stack"]
        ]
        limits_rec = data["limits"]
        limits = RuntimeLimits(limits_rec["step_budget"], limits_rec["max_trace_events"],
                               limits_rec.get("max_call_depth", 256))
        problem = problem_from_json(data["problem"]) if data.get("problem") else None
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"malformed snapshot: {exc}") from exc
    try:
        program = parse(source)
    except Exception as exc:
        raise SchemaError(f"snapshot program does not parse: {exc}") from exc
    if not isinstance(stop_idx, int) or stop_idx < 0:
        raise SchemaError(f"bad stop_idx {stop_idx!r}")
    if not program.has_function(entry.function):
        raise SchemaError(f"entry function '{entry.function}' not in program")
    if problem is not None:
        validate_problem(problem, program)
    return DebugSnapshot(source, entry, stop_idx, stack, problem, limits)


def save_snapshot(snapshot: DebugSnapshot, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(snapshot_to_json(snapshot), fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise SnapshotIoError(f"cannot write snapshot {path}: {exc}") from exc


def load_snapshot(path: str) -> DebugSnapshot:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise SnapshotIoError(f"cannot read snapshot {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"snapshot is not valid JSON: {exc}") from exc
    return snapshot_from_json(data)
