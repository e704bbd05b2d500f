"""Template generators and the prompt/reply plumbing."""

import os
import subprocess
import sys

import pytest

from patchsmith.edits import ReplaceExpr, WrapIf, apply_patch
from patchsmith.exceptions import ApplyError, NoCandidates
from patchsmith.faultloc import RepairLocation, localize
from patchsmith.genlocal import RepairContext, generate_local
from patchsmith.interp import EntryCall, execute
from patchsmith.minilang import parse
from patchsmith.prompt import (
    PromptDocument,
    build_prompt,
    conversational_repair,
    external_generator_configured,
    parse_generator_reply,
)
from patchsmith.snapshot import AtEvent, capture, derive_symptom
from patchsmith.validate import validate

from corpus_helpers import produces_fixed_source
from patchsmith import corpus


def _context(source, entry=None, stop=None):
    entry = entry or EntryCall.of("main")
    program = parse(source)
    trace = execute(program, entry)
    rule = stop or AtEvent(len(trace.events) - 1)
    snap = capture(source, entry, stop_rule=rule)
    return program, trace, snap, RepairContext.of(snap, trace, program)


def _location(source, needle, function="main"):
    line = next(i for i, text in enumerate(source.splitlines(), 1) if needle in text)
    return RepairLocation(function, line, 0, 0, 1.0)


def test_relational_flip_yields_exactly_five_alternatives():
    source = "fn main() {\n    let a = 1;\n    let b = 2;\n    if (a < b) {\n        print(1);\n    }\n}\n"
    program, trace, snap, ctx = _context(source)
    patches = generate_local(program, _location(source, "if (a < b)"), ctx)
    flips = [p for p in patches if "flip '<'" in p.provenance]
    new_ops = set()
    for p in flips:
        action = p.edits[0].action
        assert isinstance(action, ReplaceExpr)
        new_ops.add(action.new_expr.op)
    assert new_ops == {"<=", ">", ">=", "==", "!="}


def test_divisor_guard_template_present():
    source = "fn main() {\n    let a = 5;\n    let b = 0;\n    let x = a / b;\n    print(x);\n}\n"
    program, trace, snap, ctx = _context(source)
    patches = generate_local(program, _location(source, "let x"), ctx)
    wraps = [p for p in patches
             if isinstance(p.edits[0].action, WrapIf) and "b != 0" in p.provenance]
    assert wraps, "expected an if (b != 0) wrap candidate"


def test_template_closure_over_corpus_ground_truths():
    """Some template generator emits each single-edit ground-truth patch."""
    for bug in corpus.single_edit_bugs():
        program = parse(bug.buggy_source)
        trace = execute(program, bug.entry, bug.limits)
        snap = corpus.snapshot_for(bug)
        ctx = RepairContext.of(snap, trace, program)
        target = bug.ground_truth.edits[0].target
        patches = generate_local(program, target, ctx)
        assert any(produces_fixed_source(program, p, bug.fixed_source) for p in patches), bug.name


def test_every_emitted_patch_applies_cleanly():
    checked = 0
    for bug in corpus.single_edit_bugs()[:8]:
        program = parse(bug.buggy_source)
        trace = execute(program, bug.entry, bug.limits)
        snap = corpus.snapshot_for(bug)
        ctx = RepairContext.of(snap, trace, program)
        for location in localize(snap, trace, program).locations[:5]:
            for patch in generate_local(program, location, ctx):
                apply_patch(program, patch)  # must not raise
                checked += 1
    assert checked > 100


def test_generator_output_deterministic():
    bug = corpus.bug_by_name("kadane_update")
    program = parse(bug.buggy_source)
    trace = execute(program, bug.entry, bug.limits)
    snap = corpus.snapshot_for(bug)
    ctx = RepairContext.of(snap, trace, program)
    target = bug.ground_truth.edits[0].target
    one = [(p.provenance, p.strategy) for p in generate_local(program, target, ctx)]
    two = [(p.provenance, p.strategy) for p in generate_local(program, target, ctx)]
    assert one == two


def test_candidate_cap_respected():
    bug = corpus.bug_by_name("rif_twin_scan")
    program = parse(bug.buggy_source)
    trace = execute(program, bug.entry, bug.limits)
    snap = corpus.snapshot_for(bug)
    ctx = RepairContext.of(snap, trace, program)
    target = bug.ground_truth.edits[0].target
    assert len(generate_local(program, target, ctx, cap=7)) <= 7


def test_never_deletes_let_bindings():
    source = "fn main() {\n    let a = 1;\n    print(a);\n}\n"
    program, trace, snap, ctx = _context(source)
    patches = generate_local(program, _location(source, "let a"), ctx)
    from patchsmith.edits import Delete

    assert not any(isinstance(p.edits[0].action, Delete) for p in patches)


# --- prompt builder -----------------------------------------------------------------

def _gcd_prompt(history=None):
    bug = corpus.bug_by_name("gcd_base_flip")
    program = parse(bug.buggy_source)
    trace = execute(program, bug.entry, bug.limits)
    snap = corpus.snapshot_for(bug)
    location = RepairLocation("gcd", 2, 0, 0, 1.0)
    return build_prompt(snap, trace, location, history, program=program), snap, trace


def test_prompt_sections_in_order_without_history():
    doc, _, _ = _gcd_prompt()
    titles = [t for t, _ in doc.sections]
    assert titles[0] == "Problem"
    assert any(t.startswith("Buggy function") for t in titles)
    assert "Entry input" in titles
    assert "Symptom" in titles
    assert not any("attempts" in t for t in titles)
    rendered = doc.render()
    assert "candidate repair location" in rendered
    assert len(rendered) <= 16000


def test_prompt_history_section_reports_failed_attempt():
    bug = corpus.bug_by_name("gcd_base_flip")
    program = parse(bug.buggy_source)
    trace = execute(program, bug.entry, bug.limits)
    snap = corpus.snapshot_for(bug)
    from patchsmith.edits import Delete, Edit, EditTarget, Patch

    failed = Patch([Edit(EditTarget("main", 9), Delete())], "llm")
    result = validate(snap, failed, original_trace=trace, program=program)
    doc, _, _ = _gcd_prompt(history=[(failed, result)])
    rendered = doc.render()
    assert "Prior repair attempts" in rendered
    assert ("did NOT resolve" in rendered) or ("resolved the symptom" in rendered)
    if not result.resolved:
        assert "raised" in rendered  # names the failure kind and location


def test_prompt_trace_excerpt_shows_states():
    source = "fn main() {\n    let a = 1;\n    let b = a + 1;\n    print(b);\n}\n"
    program = parse(source)
    trace = execute(program, EntryCall.of("main"))
    snap = capture(source, EntryCall.of("main"), stop_rule=AtEvent(len(trace.events) - 1))
    doc = build_prompt(snap, trace, RepairLocation("main", 3, 0, 0, 1.0), program=program)
    rendered = doc.render()
    assert "a=1" in rendered and "b=2" in rendered
    # every executed statement line appears
    assert "main:2" in rendered and "main:3" in rendered and "main:4" in rendered


def test_prompt_truncates_trace_excerpt_first():
    source = "fn main() {\n    let s = \"" + "x" * 400 + "\";\n    let t = 0;\n    while (t < 300) {\n        t = t + 1;\n    }\n    print(t);\n}\n"
    program = parse(source)
    trace = execute(program, EntryCall.of("main"))
    snap = capture(source, EntryCall.of("main"), stop_rule=AtEvent(len(trace.events) - 1))
    doc = build_prompt(snap, trace, RepairLocation("main", 4, 0, 0, 1.0),
                       guidance="g" * 200, program=program)
    assert len(doc.render()) <= 16000


# --- reply parsing ---------------------------------------------------------------------

def test_reply_single_statement_becomes_replace_stmt():
    location = RepairLocation("gcd", 5, 0, 0, 1.0)
    parsed = parse_generator_reply("try this:\n```\nreturn a % b;\n```", location)
    assert len(parsed.patches) == 1
    from patchsmith.edits import ReplaceStmt

    assert isinstance(parsed.patches[0].edits[0].action, ReplaceStmt)


def test_reply_prose_only_raises_no_candidates():
    with pytest.raises(NoCandidates):
        parse_generator_reply("no code here, sorry", RepairLocation("f", 1, 0, 0, 1.0))


def test_reply_skips_malformed_block_with_diagnostic():
    reply = "```\nreturn 1;\n```\nand also\n```\nlet = broken(;\n```"
    parsed = parse_generator_reply(reply, RepairLocation("f", 1, 0, 0, 1.0))
    assert len(parsed.patches) == 1
    assert len(parsed.diagnostics) == 1


def test_reply_function_rewrite_diffs_statements():
    bug = corpus.bug_by_name("gcd_base_flip")
    program = parse(bug.buggy_source)
    reply = "```\nfn gcd(a, b) {\n    if (b == 0) {\n        return a;\n    }\n    return gcd(b, a % b);\n}\n```"
    location = RepairLocation("gcd", 2, 0, 0, 1.0)
    parsed = parse_generator_reply(reply, location, program)
    assert parsed.patches
    assert produces_fixed_source(program, parsed.patches[0], bug.fixed_source)


# --- external generator adapter -----------------------------------------------------------

def _fake_generator_cmd(tmp_path, reply: str) -> str:
    script = tmp_path / "fake_gen.py"
    script.write_text(
        "import sys\nsys.stdin.read()\nprint(" + repr(reply) + ")\n"
    )
    return f"{sys.executable} {script}"


def test_adapter_disabled_without_environment(monkeypatch):
    monkeypatch.delenv("REPAIR_LLM_CMD", raising=False)
    assert not external_generator_configured()
    bug = corpus.bug_by_name("gcd_base_flip")
    program = parse(bug.buggy_source)
    trace = execute(program, bug.entry, bug.limits)
    snap = corpus.snapshot_for(bug)
    out = conversational_repair(snap, trace, program,
                                RepairLocation("gcd", 2, 0, 0, 1.0),
                                lambda p: None)
    assert out == []


def test_adapter_runs_configured_command(monkeypatch, tmp_path):
    reply = "```\nif (b == 0) {\n    return a;\n}\n```"
    monkeypatch.setenv("REPAIR_LLM_CMD", _fake_generator_cmd(tmp_path, reply))
    assert external_generator_configured()
    bug = corpus.bug_by_name("gcd_base_flip")
    program = parse(bug.buggy_source)
    trace = execute(program, bug.entry, bug.limits)
    snap = corpus.snapshot_for(bug)

    def check(patch):
        try:
            return validate(snap, patch, original_trace=trace, program=program)
        except ApplyError:
            return None

    patches = conversational_repair(snap, trace, program,
                                    RepairLocation("gcd", 2, 0, 0, 1.0), check)
    assert patches
    assert all(p.strategy == "llm" for p in patches)


def test_adapter_reprompts_at_most_twice(monkeypatch, tmp_path):
    counter = tmp_path / "calls"
    counter.write_text("")
    script = tmp_path / "gen.py"
    script.write_text(
        "import sys\n"
        "sys.stdin.read()\n"
        f"path = {str(counter)!r}\n"
        "n = len(open(path).read())\n"
        "open(path, 'a').write('x')\n"
        "print('```\\nprint(12345);\\n```')\n"
    )
    monkeypatch.setenv("REPAIR_LLM_CMD", f"{sys.executable} {script}")
    bug = corpus.bug_by_name("gcd_base_flip")
    program = parse(bug.buggy_source)
    trace = execute(program, bug.entry, bug.limits)
    snap = corpus.snapshot_for(bug)

    def check(patch):
        try:
            return validate(snap, patch, original_trace=trace, program=program)
        except ApplyError:
            return None

    conversational_repair(snap, trace, program,
                          RepairLocation("gcd", 2, 0, 0, 1.0), check)
    assert len(counter.read_text()) <= 2
