"""Comparison reports over finished runs.

Input: run directories each holding a metrics.json written by the run
command. Output: a merged per-session table with per-run deltas against the
first (reference) run, plus rendered accuracy-curve figures next to the
delimited output.
"""

from __future__ import annotations

import json
import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import DataFormatError

METRICS_FILENAME = "metrics.json"


def load_run_metrics(run_dir: str) -> dict:
    path = os.path.join(run_dir, METRICS_FILENAME)
    if not os.path.exists(path):
        raise DataFormatError(f"{run_dir}: no {METRICS_FILENAME}; not a finished run?")
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: corrupt metrics file: {exc}") from None
    for key in ("method", "seed", "sessions"):
        if key not in doc:
            raise DataFormatError(f"{path}: missing field {key!r}")
    return doc


def _run_label(doc: dict) -> str:
    return f"{doc['method']}(seed={doc['seed']})"


def comparison_rows(docs: list[dict]) -> tuple[list[str], list[list]]:
    """Merged per-session table. The first run is the reference: every other
    run gets a final-session joint-accuracy delta against it."""
    if not docs:
        raise ValueError("no runs to compare")
    header = ["session"]
    for doc in docs:
        header.append(f"{_run_label(doc)}:joint_acc")
    max_sessions = max(len(d["sessions"]) for d in docs)
    rows = []
    for t in range(1, max_sessions + 1):
        row: list = [t]
        for doc in docs:
            sessions = {s["session"]: s for s in doc["sessions"]}
            row.append(sessions[t]["joint_acc"] if t in sessions else math.nan)
        rows.append(row)
    return header, rows


def final_delta_rows(docs: list[dict]) -> tuple[list[str], list[list]]:
    header = ["run", "final_joint_acc", "delta_vs_reference"]
    ref = docs[0]["sessions"][-1]["joint_acc"]
    rows = []
    for doc in docs:
        final = doc["sessions"][-1]["joint_acc"]
        rows.append([_run_label(doc), final, final - ref])
    return header, rows


def _csv_text(header: list[str], rows: list[list]) -> str:
    def fmt(v):
        if isinstance(v, float):
            return repr(v)
        return str(v)

    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def render_accuracy_figure(docs: list[dict], path: str) -> None:
    """Joint accuracy per session, one line per run."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for doc in docs:
        xs = [s["session"] for s in doc["sessions"]]
        ys = [s["joint_acc"] for s in doc["sessions"]]
        ax.plot(xs, ys, marker="o", label=_run_label(doc))
    ax.set_xlabel("session")
    ax.set_ylabel("joint accuracy")
    ax.set_ylim(0.0, 1.0)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_forgetting_figure(docs: list[dict], path: str) -> None:
    """Base-class accuracy per session, one line per run; the picture of
    forgetting (or its absence)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for doc in docs:
        xs = [s["session"] for s in doc["sessions"]]
        ys = [s["base_acc"] for s in doc["sessions"]]
        ax.plot(xs, ys, marker="s", label=_run_label(doc))
    ax.set_xlabel("session")
    ax.set_ylabel("base-class accuracy")
    ax.set_ylim(0.0, 1.0)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report(run_dirs: list[str], out_dir: str) -> dict:
    """Build the full comparison: two CSV tables and two PNG figures.
    Returns the written paths keyed by artifact name."""
    docs = [load_run_metrics(d) for d in run_dirs]
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "sessions_csv": os.path.join(out_dir, "comparison_sessions.csv"),
        "final_csv": os.path.join(out_dir, "comparison_final.csv"),
        "joint_png": os.path.join(out_dir, "joint_accuracy.png"),
        "base_png": os.path.join(out_dir, "base_accuracy.png"),
    }
    header, rows = comparison_rows(docs)
    with open(paths["sessions_csv"], "w", encoding="utf-8") as fh:
        fh.write(_csv_text(header, rows))
    header, rows = final_delta_rows(docs)
    with open(paths["final_csv"], "w", encoding="utf-8") as fh:
        fh.write(_csv_text(header, rows))
    render_accuracy_figure(docs, paths["joint_png"])
    render_forgetting_figure(docs, paths["base_png"])
    return paths
