"""Repair-run reports: machine-readable records plus rendered figures.

The repair CLI writes one JSON report per run (every validated candidate with
its score components and unified diff), a CSV twin of the score table, and,
when a figures directory is given, two matplotlib charts: the score breakdown
of the presented patches and the suspiciousness of the top slice locations.
"""

from __future__ import annotations

import csv
import json
import os

from .edits import patch_to_json
from .faultloc import RepairLocation

CSV_COLUMNS = [
    "patch_id", "strategy", "relationship", "edits", "resolved",
    "clean_completion", "output_match", "similarity", "size_penalty", "score",
]


def candidate_record(patch_id: str, patch, result, diff: str = "") -> dict:
    return {
        "patch_id": patch_id,
        "strategy": patch.strategy,
        "relationship": patch.relationship.value if patch.relationship else None,
        "provenance": patch.provenance,
        "patch": patch_to_json(patch),
        "resolved": result.resolved,
        "clean_completion": result.clean_completion,
        "output_match": result.output_match,
        "similarity": round(result.similarity, 4),
        "size_penalty": result.size_penalty,
        "score": result.score,
        "patched_outcome": result.patched_outcome,
        "diff": diff,
    }


def location_record(location: RepairLocation) -> dict:
    return {
        "function": location.function,
        "line": location.line,
        "occurrence": location.occurrence,
        "stmt_id": location.stmt_id,
        "suspiciousness": round(location.suspiciousness, 4),
    }


def write_report(path: str, report: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")


def write_csv(path: str, candidates: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for rec in candidates:
            row = dict(rec)
            row["edits"] = len(rec["patch"]["edits"])
            writer.writerow(row)


def write_locations_csv(path: str, locations: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["function", "line", "occurrence", "stmt_id", "suspiciousness"]
        )
        writer.writeheader()
        for rec in locations:
            writer.writerow(rec)


def render_figures(figures_dir: str, presented: list[dict],
                   locations: list[dict]) -> list[str]:
    """Score-breakdown and suspiciousness charts as PNG files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(figures_dir, exist_ok=True)
    written: list[str] = []

    if presented:
        labels = [rec["patch_id"] for rec in presented]
        resolved = [1000 * int(rec["resolved"]) for rec in presented]
        clean = [100 * int(rec["clean_completion"]) for rec in presented]
        output = [50 * int(rec["output_match"]) for rec in presented]
        similarity = [round(100 * rec["similarity"]) for rec in presented]
        penalty = [-rec["size_penalty"] for rec in presented]

        fig, ax = plt.subplots(figsize=(8, 4.5))
        bottom = [0] * len(labels)
        for values, name in ((resolved, "resolved gate"), (clean, "clean completion"),
                             (output, "output match"), (similarity, "trace similarity")):
            ax.bar(labels, values, bottom=bottom, label=name)
            bottom = [b + v for b, v in zip(bottom, values)]
        ax.bar(labels, penalty, bottom=bottom, label="size penalty")
        ax.set_ylabel("score contribution")
        ax.set_title("Score breakdown of presented patches")
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = os.path.join(figures_dir, "scores.png")
        fig.savefig(path, dpi=130)
        plt.close(fig)
        written.append(path)

    if locations:
        top = locations[:10]
        labels = [f"{rec['function']}:{rec['line']}" for rec in top]
        values = [rec["suspiciousness"] for rec in top]
        fig, ax = plt.subplots(figsize=(8, 4.5))
        ax.barh(labels[::-1], values[::-1])
        ax.set_xlabel("suspiciousness")
        ax.set_xlim(0, 1.05)
        ax.set_title("Top repair locations")
        fig.tight_layout()
        path = os.path.join(figures_dir, "locations.png")
        fig.savefig(path, dpi=130)
        plt.close(fig)
        written.append(path)

    return written
