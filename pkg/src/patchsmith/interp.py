"""Deterministic tracing interpreter.

Every run yields an ExecutionTrace: the full ordered event log plus an
outcome.  Runtime failures (division by zero, bad index, assertion, overflow,
explicit throw, call-depth overflow) are trace data, never Python exceptions.

Arrays are updated functionally (IndexAssign rebinds the variable to a fresh
list), so values stored in events are never mutated afterwards and can be
shared without copying.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field

from .exceptions import ArityError, IndexOutOfRange, UnknownFunction
from .minilang import ast
from .minilang.ast import (
    ArrayLit,
    Assert,
    Assign,
    Binary,
    Block,
    BoolLit,
    Call,
    Expr,
    ExprStmt,
    ForRange,
    If,
    Index,
    IndexAssign,
    IntLit,
    Len,
    Let,
    Print,
    Program,
    Return,
    Stmt,
    StrLit,
    Throw,
    Unary,
    Var,
    While,
    INT_MAX,
    INT_MIN,
)
from .values import Value, format_value, from_json, to_json, values_equal, variant

# runtime failure kinds (trace data)
DIVISION_BY_ZERO = "DivisionByZero"
INDEX_OUT_OF_BOUNDS = "IndexOutOfBounds"
ASSERTION_FAILURE = "AssertionFailure"
OVERFLOW = "Overflow"
USER_THROW = "UserThrow"
TYPE_ERROR = "TypeError"
STACK_OVERFLOW = "StackOverflow"


@dataclass(frozen=True)
class RuntimeLimits:
    step_budget: int = 100_000
    max_trace_events: int = 500_000
    max_call_depth: int = 256

    def __post_init__(self):
        if self.step_budget <= 0 or self.max_trace_events <= 0 or self.max_call_depth <= 0:
            raise ValueError("runtime limits must be positive")


@dataclass(frozen=True)
class EntryCall:
    function: str
    args: tuple

    @staticmethod
    def of(function: str, *args: Value) -> "EntryCall":
        return EntryCall(function, tuple(args))


# --- events --------------------------------------------------------------------

@dataclass
class TraceEvent:
    idx: int


@dataclass
class StmtEnter(TraceEvent):
    stmt_id: int
    function: str
    line: int
    frame_id: int


@dataclass
class VarWrite(TraceEvent):
    frame_id: int
    name: str
    value: Value


@dataclass
class CallEnter(TraceEvent):
    callee: str
    args: list
    new_frame_id: int


@dataclass
class Ret(TraceEvent):
    frame_id: int
    value: Value


@dataclass
class Raise(TraceEvent):
    kind: str
    message: str
    function: str
    line: int
    frame_id: int


@dataclass
class Out(TraceEvent):
    text: str


@dataclass
class Outcome:
    kind: str  # "completed" | "raised" | "budget_exceeded"
    value: Value = None
    raise_kind: str = ""
    message: str = ""
    line: int = 0

    @staticmethod
    def completed(value: Value) -> "Outcome":
        return Outcome("completed", value=value)

    @staticmethod
    def raised(kind: str, message: str, line: int) -> "Outcome":
        return Outcome("raised", raise_kind=kind, message=message, line=line)

    @staticmethod
    def budget_exceeded() -> "Outcome":
        return Outcome("budget_exceeded")

    @property
    def is_completed(self) -> bool:
        return self.kind == "completed"

    @property
    def is_raised(self) -> bool:
        return self.kind == "raised"


@dataclass
class ExecutionTrace:
    events: list[TraceEvent]
    outcome: Outcome
    step_count: int

    def stmt_enters(self) -> list[StmtEnter]:
        return [e for e in self.events if isinstance(e, StmtEnter)]

    def final_raise(self) -> Raise | None:
        for event in reversed(self.events):
            if isinstance(event, Raise):
                return event
            if not isinstance(event, Out):
                return None
        return None

    def output(self) -> str:
        return "".join(e.text for e in self.events if isinstance(e, Out))


# --- shared operator semantics ---------------------------------------------------

class MiniRaiseError(Exception):
    """A MiniLang runtime failure while evaluating; becomes a Raise event."""

    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.message = message


def checked_int(value: int) -> int:
    if not INT_MIN <= value <= INT_MAX:
        raise MiniRaiseError(OVERFLOW, "integer overflow")
    return value


def apply_unary(op: str, value: Value) -> Value:
    if op == "-":
        if variant(value) != "Int":
            raise MiniRaiseError(TYPE_ERROR, f"unary '-' needs Int, got {variant(value)}")
        return checked_int(-value)
    if variant(value) != "Bool":
        raise MiniRaiseError(TYPE_ERROR, f"unary '!' needs Bool, got {variant(value)}")
    return not value


def apply_binary(op: str, left: Value, right: Value) -> Value:
    """All binary operators except the short-circuiting && and ||."""
    if op == "==":
        return values_equal(left, right)
    if op == "!=":
        return not values_equal(left, right)
    if op == "+" and variant(left) == "Str" and variant(right) == "Str":
        return left + right
    if op == "+" and variant(left) == "Array" and variant(right) == "Array":
        return list(left) + list(right)
    if variant(left) != "Int" or variant(right) != "Int":
        raise MiniRaiseError(
            TYPE_ERROR, f"'{op}' needs Int operands, got {variant(left)} and {variant(right)}"
        )
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    if op == ">=":
        return left >= right
    if op == "+":
        return checked_int(left + right)
    if op == "-":
        return checked_int(left - right)
    if op == "*":
        return checked_int(left * right)
    if op in ("/", "%"):
        if right == 0:
            raise MiniRaiseError(DIVISION_BY_ZERO, f"{op} by zero")
        quotient = abs(left) // abs(right)
        if (left < 0) != (right < 0):
            quotient = -quotient
        if op == "/":
            return checked_int(quotient)
        return left - quotient * right
    raise TypeError(f"unknown operator {op!r}")


def expect_bool(value: Value, what: str) -> bool:
    if variant(value) != "Bool":
        raise MiniRaiseError(TYPE_ERROR, f"{what} must be Bool, got {variant(value)}")
    return value


def expect_int(value: Value, what: str) -> int:
    if variant(value) != "Int":
        raise MiniRaiseError(TYPE_ERROR, f"{what} must be Int, got {variant(value)}")
    return value


def index_read(base: Value, ix: Value) -> Value:
    if variant(base) not in ("Array", "Str"):
        raise MiniRaiseError(TYPE_ERROR, f"cannot index {variant(base)}")
    if variant(ix) != "Int":
        raise MiniRaiseError(TYPE_ERROR, "index must be Int")
    if not 0 <= ix < len(base):
        raise MiniRaiseError(INDEX_OUT_OF_BOUNDS, f"index {ix} out of bounds for length {len(base)}")
    return base[ix]


def length_of(value: Value) -> int:
    if variant(value) not in ("Array", "Str"):
        raise MiniRaiseError(TYPE_ERROR, f"len() needs Array or Str, got {variant(value)}")
    return len(value)


def indexed_update(base: Value, indices: list, new_value: Value) -> Value:
    """Functional array update along an index path."""
    if variant(base) != "Array":
        raise MiniRaiseError(TYPE_ERROR, f"cannot index-assign into {variant(base)}")
    ix = indices[0]
    if variant(ix) != "Int":
        raise MiniRaiseError(TYPE_ERROR, "array index must be Int")
    if not 0 <= ix < len(base):
        raise MiniRaiseError(INDEX_OUT_OF_BOUNDS, f"index {ix} out of bounds for length {len(base)}")
    fresh = list(base)
    fresh[ix] = new_value if len(indices) == 1 else indexed_update(base[ix], indices[1:], new_value)
    return fresh


# --- interpreter -----------------------------------------------------------------

class _ReturnSignal(Exception):
    def __init__(self, value: Value):
        self.value = value


class _BudgetStop(Exception):
    pass


class _Interp:
    def __init__(self, program: Program, limits: RuntimeLimits):
        self.program = program
        self.limits = limits
        self.events: list[TraceEvent] = []
        self.steps = 0
        self.next_frame = 1
        # (function name, current line, frame id); index -1 is innermost
        self.context: list[list] = []

    # -- event emission ----------------------------------------------------

    def emit(self, event: TraceEvent) -> None:
        event.idx = len(self.events)
        self.events.append(event)

    def enter_stmt(self, stmt: Stmt) -> None:
        if self.steps >= self.limits.step_budget or len(self.events) >= self.limits.max_trace_events:
            raise _BudgetStop()
        self.steps += 1
        function, _, frame_id = self.context[-1]
        self.context[-1][1] = stmt.line
        self.emit(StmtEnter(-1, stmt.stmt_id, function, stmt.line, frame_id))

    def write(self, name: str, value: Value, env: dict) -> None:
        env[name] = value
        self.emit(VarWrite(-1, self.context[-1][2], name, value))

    # -- execution ----------------------------------------------------------

    def run(self, entry: EntryCall) -> ExecutionTrace:
        fn = self.program.function(entry.function)
        if len(entry.args) != len(fn.params):
            raise ArityError(0, entry.function, len(fn.params), len(entry.args))
        env: dict[str, Value] = {}
        self.context.append([fn.name, 0, 0])
        try:
            for param, arg in zip(fn.params, entry.args):
                self.write(param, arg, env)
            try:
                self.exec_block(fn.body, env)
                result: Value = None
            except _ReturnSignal as sig:
                result = sig.value
            self.emit(Ret(-1, 0, result))
            outcome = Outcome.completed(result)
        except MiniRaiseError as exc:
            function, line, frame_id = self.context[-1]
            self.emit(Raise(-1, exc.kind, exc.message, function, line, frame_id))
            outcome = Outcome.raised(exc.kind, exc.message, line)
        except _BudgetStop:
            outcome = Outcome.budget_exceeded()
        return ExecutionTrace(self.events, outcome, self.steps)

    def exec_block(self, block: Block, env: dict) -> None:
        for stmt in block:
            self.exec_stmt(stmt, env)

    def exec_stmt(self, stmt: Stmt, env: dict) -> None:
        self.enter_stmt(stmt)
        if isinstance(stmt, (Let, Assign)):
            self.write(stmt.name, self.eval(stmt.value, env), env)
        elif isinstance(stmt, IndexAssign):
            new_value = self.eval(stmt.value, env)
            indices = [self.eval(ix, env) for ix in stmt.indices]
            self.write(stmt.base, indexed_update(env[stmt.base], indices, new_value), env)
        elif isinstance(stmt, If):
            cond = expect_bool(self.eval(stmt.cond, env), "if condition")
            self.exec_block(stmt.then_body if cond else stmt.else_body, env)
        elif isinstance(stmt, While):
            while True:
                if not expect_bool(self.eval(stmt.cond, env), "while condition"):
                    break
                self.exec_block(stmt.body, env)
                self.enter_stmt(stmt)
        elif isinstance(stmt, ForRange):
            # bounds re-evaluated before every iteration check, C-style
            first = True
            i = 0
            while True:
                lo = expect_int(self.eval(stmt.lo, env), "range bound")
                hi = expect_int(self.eval(stmt.hi, env), "range bound")
                if first:
                    i = lo
                    first = False
                if i >= hi:
                    break
                self.write(stmt.var, i, env)
                self.exec_block(stmt.body, env)
                i += 1
                self.enter_stmt(stmt)
        elif isinstance(stmt, Return):
            raise _ReturnSignal(None if stmt.value is None else self.eval(stmt.value, env))
        elif isinstance(stmt, Throw):
            raise MiniRaiseError(USER_THROW, format_value(self.eval(stmt.message, env)))
        elif isinstance(stmt, Assert):
            if not expect_bool(self.eval(stmt.cond, env), "assert condition"):
                raise MiniRaiseError(ASSERTION_FAILURE, "assertion failed")
        elif isinstance(stmt, Print):
            self.emit(Out(-1, format_value(self.eval(stmt.value, env)) + "\n"))
        elif isinstance(stmt, ExprStmt):
            self.eval(stmt.expr, env)
        else:
            raise TypeError(f"unknown statement node {type(stmt).__name__}")

    # -- expressions -----------------------------------------------------------

    def eval(self, expr: Expr, env: dict) -> Value:
        if isinstance(expr, IntLit):
            return expr.value
        if isinstance(expr, BoolLit):
            return expr.value
        if isinstance(expr, StrLit):
            return expr.value
        if isinstance(expr, ArrayLit):
            return [self.eval(item, env) for item in expr.items]
        if isinstance(expr, Var):
            return env[expr.name]
        if isinstance(expr, Unary):
            return apply_unary(expr.op, self.eval(expr.operand, env))
        if isinstance(expr, Binary):
            if expr.op in ("&&", "||"):
                left = expect_bool(self.eval(expr.left, env), f"'{expr.op}' operand")
                if expr.op == "&&" and not left:
                    return False
                if expr.op == "||" and left:
                    return True
                return expect_bool(self.eval(expr.right, env), f"'{expr.op}' operand")
            left = self.eval(expr.left, env)
            right = self.eval(expr.right, env)
            return apply_binary(expr.op, left, right)
        if isinstance(expr, Call):
            args = [self.eval(a, env) for a in expr.args]
            return self.call(expr.callee, args)
        if isinstance(expr, Index):
            base = self.eval(expr.base, env)
            return index_read(base, self.eval(expr.index, env))
        if isinstance(expr, Len):
            return length_of(self.eval(expr.arg, env))
        raise TypeError(f"unknown expression node {type(expr).__name__}")

    def call(self, callee: str, args: list) -> Value:
        if len(self.context) >= self.limits.max_call_depth:
            raise MiniRaiseError(STACK_OVERFLOW, f"call depth exceeds {self.limits.max_call_depth}")
        fn = self.program.function(callee)
        frame_id = self.next_frame
        self.next_frame += 1
        self.emit(CallEnter(-1, callee, list(args), frame_id))
        env: dict[str, Value] = {}
        self.context.append([fn.name, 0, frame_id])
        for param, arg in zip(fn.params, args):
            self.write(param, arg, env)
        try:
            self.exec_block(fn.body, env)
            result: Value = None
        except _ReturnSignal as sig:
            result = sig.value
        # on _MiniRaise/_BudgetStop the pop is intentionally skipped so the
        # innermost frame context is still on the stack for the Raise event
        self.context.pop()
        self.emit(Ret(-1, frame_id, result))
        return result


def execute(program: Program, entry: EntryCall, limits: RuntimeLimits = RuntimeLimits()) -> ExecutionTrace:
    """Run `entry` in a fresh interpreter and return the full trace."""
    if not program.has_function(entry.function):
        raise UnknownFunction(f"entry function '{entry.function}' not found")
    # each MiniLang call level costs a handful of Python frames; never lower
    # the process limit (other threads may be executing too)
    needed = 2000 + limits.max_call_depth * 12
    if sys.getrecursionlimit() < needed:
        sys.setrecursionlimit(needed)
    return _Interp(program, limits).run(entry)


# --- state reconstruction ------------------------------------------------------------

def state_at(trace: ExecutionTrace, idx: int) -> dict[int, dict[str, Value]]:
    """Bindings of every live frame at event index `idx` (inclusive)."""
    if not 0 <= idx < len(trace.events):
        raise IndexOutOfRange(f"event index {idx} out of range 0..{len(trace.events) - 1}")
    frames: dict[int, dict[str, Value]] = {0: {}}
    for event in trace.events[: idx + 1]:
        if isinstance(event, CallEnter):
            frames[event.new_frame_id] = {}
        elif isinstance(event, VarWrite):
            frames[event.frame_id][event.name] = event.value
        elif isinstance(event, Ret):
            frames.pop(event.frame_id, None)
    return frames


def frame_functions(trace: ExecutionTrace) -> dict[int, str]:
    """frame_id -> function name, for every frame that ever opened."""
    functions: dict[int, str] = {}
    for event in trace.events:
        if isinstance(event, CallEnter):
            functions[event.new_frame_id] = event.callee
        elif isinstance(event, StmtEnter) and event.frame_id not in functions:
            functions[event.frame_id] = event.function
    return functions


def live_frames_at(trace: ExecutionTrace, idx: int) -> list[int]:
    """Open frame ids at event `idx`, innermost first."""
    stack = [0]
    for event in trace.events[: idx + 1]:
        if isinstance(event, CallEnter):
            stack.append(event.new_frame_id)
        elif isinstance(event, Ret) and event.frame_id in stack:
            stack.remove(event.frame_id)
    return list(reversed(stack))


# --- serialization ---------------------------------------------------------------------

def _event_record(event: TraceEvent) -> dict:
    if isinstance(event, StmtEnter):
        return {"idx": event.idx, "event": "StmtEnter", "stmt_id": event.stmt_id,
                "function": event.function, "line": event.line, "frame_id": event.frame_id}
    if isinstance(event, VarWrite):
        return {"idx": event.idx, "event": "VarWrite", "frame_id": event.frame_id,
                "name": event.name, "value": to_json(event.value)}
    if isinstance(event, CallEnter):
        return {"idx": event.idx, "event": "CallEnter", "callee": event.callee,
                "args": [to_json(a) for a in event.args], "new_frame_id": event.new_frame_id}
    if isinstance(event, Ret):
        return {"idx": event.idx, "event": "Ret", "frame_id": event.frame_id,
                "value": to_json(event.value)}
    if isinstance(event, Raise):
        return {"idx": event.idx, "event": "Raise", "kind": event.kind, "message": event.message,
                "function": event.function, "line": event.line, "frame_id": event.frame_id}
    if isinstance(event, Out):
        return {"idx": event.idx, "event": "Out", "text": event.text}
    raise TypeError(f"unknown event {type(event).__name__}")


def _event_from_record(rec: dict) -> TraceEvent:
    kind = rec["event"]
    if kind == "StmtEnter":
        return StmtEnter(rec["idx"], rec["stmt_id"], rec["function"], rec["line"], rec["frame_id"])
    if kind == "VarWrite":
        return VarWrite(rec["idx"], rec["frame_id"], rec["name"], from_json(rec["value"]))
    if kind == "CallEnter":
        return CallEnter(rec["idx"], rec["callee"], [from_json(a) for a in rec["args"]], rec["new_frame_id"])
    if kind == "Ret":
        return Ret(rec["idx"], rec["frame_id"], from_json(rec["value"]))
    if kind == "Raise":
        return Raise(rec["idx"], rec["kind"], rec["message"], rec["function"], rec["line"], rec["frame_id"])
    if kind == "Out":
        return Out(rec["idx"], rec["text"])
    raise ValueError(f"unknown event record {kind!r}")


def serialize_trace(trace: ExecutionTrace) -> str:
    """Line-delimited trace: one event per line, then one outcome trailer."""
    lines = [json.dumps(_event_record(e), separators=(", ", ": ")) for e in trace.events]
    trailer = {"outcome": trace.outcome.kind, "step_count": trace.step_count}
    if trace.outcome.is_completed:
        trailer["value"] = to_json(trace.outcome.value)
    elif trace.outcome.is_raised:
        trailer.update(raise_kind=trace.outcome.raise_kind, message=trace.outcome.message,
                       line=trace.outcome.line)
    lines.append(json.dumps(trailer, separators=(", ", ": ")))
    return "\n".join(lines) + "\n"


def deserialize_trace(text: str) -> ExecutionTrace:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty trace text")
    trailer = json.loads(lines[-1])
    events = [_event_from_record(json.loads(ln)) for ln in lines[:-1]]
    kind = trailer["outcome"]
    if kind == "completed":
        outcome = Outcome.completed(from_json(trailer["value"]))
    elif kind == "raised":
        outcome = Outcome.raised(trailer["raise_kind"], trailer["message"], trailer["line"])
    else:
        outcome = Outcome.budget_exceeded()
    return ExecutionTrace(events, outcome, trailer["step_count"])
