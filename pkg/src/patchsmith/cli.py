"""Command-line interface.

    patchsmith run prog.ml0 --entry main --args 12 8
    patchsmith capture prog.ml0 --entry main --at-raise -o snap.json
    patchsmith slice snap.json
    patchsmith repair snap.json --top 5 -o report.json --figures-dir figs
    patchsmith verify prog.ml0 --entry main --problem problem.json
    patchsmith corpus list | corpus export NAME -o DIR
    patchsmith serve --port 8080 --data-dir sessions
"""

from __future__ import annotations

import argparse
import difflib
import json
import os
import sys

from .edits import apply_patch_detailed, patch_from_json
from .exceptions import PatchsmithError
from .faultloc import TOP_LOCATIONS, localize
from .genglobal import SearchConfig, run_all_generators
from .interp import EntryCall, RuntimeLimits, execute, serialize_trace
from .minilang import parse, parse_expression, pretty_print
from .minilang.ast import ArrayLit, BoolLit, Expr, IntLit, StrLit, Unary
from .report import (
    candidate_record,
    location_record,
    render_figures,
    write_csv,
    write_locations_csv,
    write_report,
)
from .snapshot import (
    AtEvent,
    AtLineOccurrence,
    AtRaise,
    capture,
    derive_symptom,
    load_snapshot,
    problem_from_json,
    save_snapshot,
    snapshot_to_json,
)
from .validate import rank, symptom_resolved, validate
from .values import Value


def literal_value(text: str) -> Value:
    """A MiniLang literal ('12', 'true', '"hi"', '[1, 2]', '-3') as a value."""

    def evaluate(expr: Expr) -> Value:
        if isinstance(expr, IntLit):
            return expr.value
        if isinstance(expr, BoolLit):
            return expr.value
        if isinstance(expr, StrLit):
            return expr.value
        if isinstance(expr, ArrayLit):
            return [evaluate(item) for item in expr.items]
        if isinstance(expr, Unary) and expr.op == "-":
            inner = evaluate(expr.operand)
            if isinstance(inner, bool) or not isinstance(inner, int):
                raise ValueError(f"not a literal: {text!r}")
            return -inner
        raise ValueError(f"not a literal: {text!r}")

    return evaluate(parse_expression(text))


def _entry_from(args: argparse.Namespace) -> EntryCall:
    return EntryCall(args.entry, tuple(literal_value(a) for a in args.args))


def _limits_from(args: argparse.Namespace) -> RuntimeLimits:
    return RuntimeLimits(step_budget=args.budget)


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def cmd_run(args: argparse.Namespace) -> int:
    program = parse(_read(args.program))
    trace = execute(program, _entry_from(args), _limits_from(args))
    sys.stdout.write(serialize_trace(trace))
    return 0


def cmd_capture(args: argparse.Namespace) -> int:
    source = _read(args.program)
    if args.at_event is not None:
        rule = AtEvent(args.at_event)
    elif args.at_line:
        parts = args.at_line.split(":")
        if len(parts) < 2:
            print("--at-line expects FUNCTION:LINE[:OCCURRENCE]", file=sys.stderr)
            return 2
        k = int(parts[2]) if len(parts) > 2 else 0
        rule = AtLineOccurrence(parts[0], int(parts[1]), k)
    else:
        rule = AtRaise()
    snapshot = capture(source, _entry_from(args), _limits_from(args), rule)
    if args.derive_problem:
        trace = execute(parse(source), snapshot.entry, snapshot.limits)
        snapshot = snapshot.with_problem(derive_symptom(trace))
    save_snapshot(snapshot, args.output)
    print(f"snapshot written to {args.output} (stop_idx={snapshot.stop_idx})")
    return 0


def cmd_slice(args: argparse.Namespace) -> int:
    snapshot = load_snapshot(args.snapshot)
    program = parse(snapshot.program_source)
    trace = execute(program, snapshot.entry, snapshot.limits)
    result = localize(snapshot, trace, program)
    locations = result.locations[: args.top]
    print(f"{'rank':>4}  {'location':<24} {'suspiciousness':>14}")
    for i, loc in enumerate(locations, 1):
        print(f"{i:>4}  {loc.function + ':' + str(loc.line):<24} {loc.suspiciousness:>14.3f}")
    records = [location_record(loc) for loc in locations]
    records_path = args.records or (args.snapshot + ".locations.jsonl")
    with open(records_path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    print(f"{len(records)} location records written to {records_path}")
    return 0


def cmd_repair(args: argparse.Namespace) -> int:
    snapshot = load_snapshot(args.snapshot)
    if snapshot.problem is None:
        print("snapshot has no problem specification; set one first", file=sys.stderr)
        return 2
    program = parse(snapshot.program_source)
    trace = execute(program, snapshot.entry, snapshot.limits)
    loc_result = localize(snapshot, trace, program)
    run = run_all_generators(snapshot, trace, SearchConfig(), program)

    results = []
    for patch in run.patches:
        try:
            results.append((patch, validate(snapshot, patch, original_trace=trace,
                                            program=program)))
        except PatchsmithError:
            continue
    ranked = rank(results, args.top)

    original = pretty_print(program)
    presented = []
    for i, (patch, result) in enumerate(ranked.entries):
        applied = apply_patch_detailed(program, patch)
        diff = "".join(difflib.unified_diff(
            original.splitlines(keepends=True), applied.source.splitlines(keepends=True),
            fromfile="a/program.ml0", tofile="b/program.ml0", n=3))
        presented.append(candidate_record(f"p{i}", patch, result, diff))

    locations = [location_record(loc) for loc in loc_result.locations[:TOP_LOCATIONS]]
    report = {
        "snapshot": args.snapshot,
        "candidates_generated": len(run.patches),
        "candidates_validated": len(results),
        "budget_exhausted": run.budget_exhausted,
        "locations": locations,
        "presented": presented,
    }
    write_report(args.output, report)
    written = [args.output]
    if args.csv:
        write_csv(args.csv, presented)
        written.append(args.csv)
    if args.figures_dir:
        locations_csv = os.path.join(args.figures_dir, "locations.csv")
        os.makedirs(args.figures_dir, exist_ok=True)
        write_locations_csv(locations_csv, locations)
        written.append(locations_csv)
        written += render_figures(args.figures_dir, presented, locations)

    for rec in presented:
        rel = f" [{rec['relationship']}]" if rec["relationship"] else ""
        print(f"{rec['patch_id']}: score={rec['score']} {rec['strategy']}{rel}  "
              f"{rec['provenance'][:80]}")
    if not presented:
        print("no suggestion (no symptom-resolving patch found)")
    print("report written to " + ", ".join(written))
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    program = parse(_read(args.program))
    with open(args.problem, encoding="utf-8") as fh:
        problem = problem_from_json(json.load(fh))
    trace = execute(program, _entry_from(args), _limits_from(args))
    ok = symptom_resolved(problem, trace)
    print("symptom resolved" if ok else "symptom still present")
    return 0 if ok else 1


def cmd_corpus(args: argparse.Namespace) -> int:
    from . import corpus

    if args.action == "list":
        for bug in corpus.all_bugs():
            print(f"{bug.name:22s} {bug.category:6s} {bug.description}")
        return 0
    bug = corpus.bug_by_name(args.name)
    os.makedirs(args.output, exist_ok=True)
    with open(os.path.join(args.output, "buggy.ml0"), "w", encoding="utf-8") as fh:
        fh.write(bug.buggy_source)
    with open(os.path.join(args.output, "fixed.ml0"), "w", encoding="utf-8") as fh:
        fh.write(bug.fixed_source)
    snapshot = corpus.snapshot_for(bug)
    save_snapshot(snapshot, os.path.join(args.output, "snapshot.json"))
    with open(os.path.join(args.output, "problem.json"), "w", encoding="utf-8") as fh:
        json.dump(snapshot_to_json(snapshot)["problem"], fh, indent=2)
        fh.write("\n")
    print(f"corpus bug '{bug.name}' exported to {args.output}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app
    from .session import EngineConfig, RepairService

    service = RepairService(EngineConfig(data_dir=args.data_dir))
    app = create_app(service, static_dir=args.static_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _add_entry_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--entry", default="main", help="entry function name")
    parser.add_argument("--args", nargs="*", default=[],
                        help="entry arguments as MiniLang literals")
    parser.add_argument("--budget", type=int, default=100_000,
                        help="step budget for the simulated run")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="patchsmith",
                                     description="snapshot-driven program repair for MiniLang")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a program and print its trace")
    p.add_argument("program")
    _add_entry_options(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("capture", help="freeze a failing run into a snapshot")
    p.add_argument("program")
    _add_entry_options(p)
    stop = p.add_mutually_exclusive_group()
    stop.add_argument("--at-raise", action="store_true", default=True,
                      help="stop at the raise event (default)")
    stop.add_argument("--at-event", type=int, default=None, metavar="IDX",
                      help="stop at a trace event index")
    stop.add_argument("--at-line", default=None, metavar="FN:LINE[:K]",
                      help="stop at the k-th execution of a line")
    p.add_argument("--derive-problem", action="store_true",
                   help="fill the problem from the final raise")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_capture)

    p = sub.add_parser("slice", help="rank repair locations for a snapshot")
    p.add_argument("snapshot")
    p.add_argument("--top", type=int, default=TOP_LOCATIONS)
    p.add_argument("--records", default=None,
                   help="where to write machine-readable location records")
    p.set_defaults(func=cmd_slice)

    p = sub.add_parser("repair", help="generate, validate and rank patches")
    p.add_argument("snapshot")
    p.add_argument("--top", type=int, default=5)
    p.add_argument("-o", "--output", default="report.json")
    p.add_argument("--csv", default=None, help="also write the score table as CSV")
    p.add_argument("--figures-dir", default=None,
                   help="render score/location figures into this directory")
    p.set_defaults(func=cmd_repair)

    p = sub.add_parser("verify", help="check whether a problem is resolved in a program")
    p.add_argument("program")
    _add_entry_options(p)
    p.add_argument("--problem", required=True, help="problem specification JSON file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("corpus", help="inspect or export the bundled bug corpus")
    p.add_argument("action", choices=["list", "export"])
    p.add_argument("name", nargs="?", default=None)
    p.add_argument("-o", "--output", default="corpus-export")
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("serve", help="start the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--data-dir", default="patchsmith-sessions")
    p.add_argument("--static-dir", default=None,
                   help="serve a built web console from this directory")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "corpus" and args.action == "export" and not args.name:
        print("corpus export needs a bug name", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except PatchsmithError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
