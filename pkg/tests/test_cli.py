"""CLI subcommands and the report/figure pipeline."""

import json
import os

import pytest

from patchsmith.cli import literal_value, main

from patchsmith import corpus


def _export(tmp_path, name="gcd_base_flip"):
    out = tmp_path / name
    assert main(["corpus", "export", name, "-o", str(out)]) == 0
    return out


def test_literal_values():
    assert literal_value("12") == 12
    assert literal_value("-3") == -3
    assert literal_value("true") is True
    assert literal_value('"hi"') == "hi"
    assert literal_value("[1, [2, 3]]") == [1, [2, 3]]
    with pytest.raises(Exception):
        literal_value("1 + 2x")


def test_run_prints_line_delimited_trace(tmp_path, capsys):
    exported = _export(tmp_path)
    capsys.readouterr()  # drop the export message
    assert main(["run", str(exported / "fixed.ml0"), "--entry", "main"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert all(line.startswith("{") for line in lines)
    trailer = json.loads(lines[-1])
    assert trailer["outcome"] == "completed"
    events = [json.loads(line) for line in lines[:-1]]
    assert [e["idx"] for e in events] == list(range(len(events)))


def test_capture_with_derive_problem(tmp_path, capsys):
    exported = _export(tmp_path)
    snap_path = tmp_path / "snap.json"
    assert main(["capture", str(exported / "buggy.ml0"), "--entry", "main",
                 "--at-raise", "--derive-problem", "-o", str(snap_path)]) == 0
    data = json.loads(snap_path.read_text())
    assert data["problem"]["kind"] == "unexpected_exception"
    assert data["problem"]["raise_kind"] == "DivisionByZero"


def test_capture_at_line(tmp_path):
    exported = _export(tmp_path, "count_evens_parity")
    snap_path = tmp_path / "line-snap.json"
    assert main(["capture", str(exported / "buggy.ml0"), "--entry", "main",
                 "--at-line", "count_evens:5", "-o", str(snap_path)]) == 0
    assert json.loads(snap_path.read_text())["stack"]


def test_slice_prints_table_and_writes_records(tmp_path, capsys):
    exported = _export(tmp_path)
    records = tmp_path / "locs.jsonl"
    assert main(["slice", str(exported / "snapshot.json"),
                 "--records", str(records)]) == 0
    out = capsys.readouterr().out
    assert "suspiciousness" in out and "gcd:5" in out
    rows = [json.loads(line) for line in records.read_text().splitlines()]
    assert rows[0]["function"] == "gcd"
    assert 0 < rows[0]["suspiciousness"] <= 1.0


def test_repair_writes_report_csv_and_figures(tmp_path, capsys):
    exported = _export(tmp_path)
    report = tmp_path / "report.json"
    csv_path = tmp_path / "report.csv"
    figs = tmp_path / "figs"
    assert main(["repair", str(exported / "snapshot.json"), "--top", "5",
                 "-o", str(report), "--csv", str(csv_path),
                 "--figures-dir", str(figs)]) == 0
    data = json.loads(report.read_text())
    assert data["presented"]
    first = data["presented"][0]
    assert {"strategy", "score", "similarity", "diff", "patch"} <= set(first)
    assert first["diff"].startswith("--- a/program.ml0")
    header = csv_path.read_text().splitlines()[0]
    assert header.startswith("patch_id,strategy,relationship")
    assert (figs / "scores.png").stat().st_size > 1000
    assert (figs / "locations.png").stat().st_size > 1000
    assert (figs / "locations.csv").exists()


def test_verify_exit_codes(tmp_path, capsys):
    exported = _export(tmp_path)
    problem = str(exported / "problem.json")
    assert main(["verify", str(exported / "fixed.ml0"), "--entry", "main",
                 "--problem", problem]) == 0
    assert main(["verify", str(exported / "buggy.ml0"), "--entry", "main",
                 "--problem", problem]) == 1


def test_corpus_list(capsys):
    assert main(["corpus", "list"]) == 0
    out = capsys.readouterr().out
    assert "gcd_base_flip" in out and "rif_twin_scan" in out


def test_missing_snapshot_reports_engine_error(tmp_path, capsys):
    assert main(["slice", str(tmp_path / "missing.json")]) == 1
    assert "error:" in capsys.readouterr().err
