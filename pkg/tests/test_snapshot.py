"""Snapshot capture, symptom derivation, serialization round-trips."""

import json

import pytest

from patchsmith.exceptions import NoFailure, SchemaError, SnapshotInconsistent, StopNotReached
from patchsmith.interp import EntryCall, RuntimeLimits, execute
from patchsmith.minilang import parse
from patchsmith.snapshot import (
    AtEvent,
    AtLineOccurrence,
    AtRaise,
    UnexpectedException,
    VariableWrongValue,
    capture,
    derive_symptom,
    load_snapshot,
    save_snapshot,
    snapshot_from_json,
    snapshot_to_json,
    verify_consistency,
)

import corpus_helpers  # noqa: F401  (ensures tests dir on path for other modules)

BUGGY_GCD = """fn gcd(a, b) {
    if (b != 0) {
        return a;
    }
    return gcd(b, a % b);
}

fn main() {
    print(gcd(12, 0));
}
"""


def test_capture_at_raise_includes_operands_in_stack():
    snap = capture(BUGGY_GCD, EntryCall.of("main"))
    trace = execute(parse(BUGGY_GCD), EntryCall.of("main"))
    final = trace.final_raise()
    assert snap.stop_idx == final.idx
    innermost = snap.stack[0]
    assert innermost.function == "gcd"
    assert innermost.bindings == {"a": 12, "b": 0}
    assert [f.function for f in snap.stack] == ["gcd", "main"]
    assert snap.problem is None


def test_capture_at_event_zero_gives_empty_frame():
    snap = capture("fn main(){ print(1); }", EntryCall.of("main"), stop_rule=AtEvent(0))
    assert len(snap.stack) == 1
    assert snap.stack[0].frame_id == 0
    assert snap.stack[0].bindings == {}


def test_capture_unreached_line_raises_stop_not_reached():
    source = "fn main() {\n    if (false) {\n        print(1);\n    }\n}\n"
    with pytest.raises(StopNotReached):
        capture(source, EntryCall.of("main"), stop_rule=AtLineOccurrence("main", 3, 0))


def test_capture_at_line_occurrence_counts_iterations():
    source = "fn main() {\n    for i in 0..3 {\n        print(i);\n    }\n}\n"
    snap = capture(source, EntryCall.of("main"), stop_rule=AtLineOccurrence("main", 3, 2))
    trace = execute(parse(source), EntryCall.of("main"))
    from patchsmith.interp import StmtEnter

    hits = [e.idx for e in trace.events
            if isinstance(e, StmtEnter) and e.line == 3]
    assert snap.stop_idx == hits[2]


def test_derive_symptom_projects_final_raise():
    trace = execute(parse(BUGGY_GCD), EntryCall.of("main"))
    problem = derive_symptom(trace)
    assert isinstance(problem, UnexpectedException)
    assert (problem.function, problem.raise_kind) == ("gcd", "DivisionByZero")


def test_derive_symptom_rejects_completed_trace():
    trace = execute(parse("fn main(){ print(1); }"), EntryCall.of("main"))
    with pytest.raises(NoFailure):
        derive_symptom(trace)


def test_save_load_round_trip(tmp_path):
    snap = capture(BUGGY_GCD, EntryCall.of("main"))
    snap = snap.with_problem(UnexpectedException("gcd", 5, "DivisionByZero"))
    path = tmp_path / "snap.json"
    save_snapshot(snap, str(path))
    loaded = load_snapshot(str(path))
    assert snapshot_to_json(loaded) == snapshot_to_json(snap)
    # loading is self-consistent against re-execution
    verify_consistency(loaded)


def test_load_rejects_future_schema_version(tmp_path):
    snap = capture(BUGGY_GCD, EntryCall.of("main"))
    data = snapshot_to_json(snap)
    data["version"] = 99
    path = tmp_path / "snap.json"
    path.write_text(json.dumps(data))
    with pytest.raises(SchemaError) as exc:
        load_snapshot(str(path))
    assert "99" in str(exc.value)


def test_load_rejects_problem_on_missing_line(tmp_path):
    snap = capture(BUGGY_GCD, EntryCall.of("main"))
    data = snapshot_to_json(snap)
    data["problem"] = {"kind": "line_should_not_execute", "function": "gcd", "line": 77}
    path = tmp_path / "snap.json"
    path.write_text(json.dumps(data))
    with pytest.raises(SchemaError):
        load_snapshot(str(path))


def test_load_rejects_equal_bad_and_expected():
    snap = capture(BUGGY_GCD, EntryCall.of("main"))
    data = snapshot_to_json(snap)
    data["problem"] = {"kind": "variable_wrong_value", "function": "gcd",
                       "name": "a", "bad_value": 5, "expected": 5}
    with pytest.raises(SchemaError):
        snapshot_from_json(data)


def test_load_rejects_unparseable_program():
    snap = capture(BUGGY_GCD, EntryCall.of("main"))
    data = snapshot_to_json(snap)
    data["program_source"] = "fn main( {"
    with pytest.raises(SchemaError):
        snapshot_from_json(data)


def test_stale_stack_detected_on_verify():
    snap = capture(BUGGY_GCD, EntryCall.of("main"))
    snap.stack[0].bindings["a"] = 999
    with pytest.raises(SnapshotInconsistent):
        verify_consistency(snap)


def test_snapshot_reexecution_reproduces_stack_exactly():
    from patchsmith import corpus

    for bug in corpus.all_bugs()[:8]:
        snap = corpus.snapshot_for(bug)
        verify_consistency(snap)  # deep value equality inside


def test_capture_normalizes_program_object_sources():
    program = parse("fn main(){ print(1); }")
    snap = capture(program, EntryCall.of("main"), stop_rule=AtEvent(0))
    assert snap.program_source == "fn main() {\n    print(1);\n}\n"
