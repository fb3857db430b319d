import math

import pytest

from fsll.errors import DataFormatError
from fsll.reporting import (comparison_rows, final_delta_rows,
                            load_run_metrics, write_report)


def _doc(method, seed, joints, bases=None):
    bases = bases or joints
    return {
        "method": method,
        "seed": seed,
        "protocol_violating": False,
        "sessions": [
            {"session": t + 1, "joint_acc": j, "base_acc": b, "new_acc": j}
            for t, (j, b) in enumerate(zip(joints, bases))
        ],
    }


def test_comparison_rows_merge():
    docs = [_doc("FSLL", 0, [0.9, 0.8, 0.7]), _doc("Frozen", 0, [0.9, 0.75, 0.65])]
    header, rows = comparison_rows(docs)
    assert header == ["session", "FSLL(seed=0):joint_acc", "Frozen(seed=0):joint_acc"]
    assert rows == [[1, 0.9, 0.9], [2, 0.8, 0.75], [3, 0.7, 0.65]]


def test_comparison_rows_pads_short_runs_with_nan():
    docs = [_doc("FSLL", 0, [0.9, 0.8]), _doc("Frozen", 1, [0.9])]
    _, rows = comparison_rows(docs)
    assert math.isnan(rows[1][2])
    assert rows[1][1] == 0.8


def test_comparison_rows_rejects_empty():
    with pytest.raises(ValueError):
        comparison_rows([])


def test_final_deltas_are_against_first_run():
    docs = [_doc("FSLL", 0, [0.8]), _doc("FtCNN", 0, [0.5]), _doc("Joint", 0, [0.9])]
    header, rows = final_delta_rows(docs)
    assert header == ["run", "final_joint_acc", "delta_vs_reference"]
    assert rows[0] == ["FSLL(seed=0)", 0.8, 0.0]
    assert rows[1][2] == pytest.approx(-0.3)
    assert rows[2][2] == pytest.approx(0.1)


def test_load_run_metrics_requires_fields(tmp_path):
    run = tmp_path / "r"
    run.mkdir()
    (run / "metrics.json").write_text('{"method": "FSLL", "seed": 0}')
    with pytest.raises(DataFormatError, match="sessions"):
        load_run_metrics(str(run))


def test_write_report_produces_nonempty_figures(tmp_path):
    import json

    for i, method in enumerate(("FSLL", "Frozen")):
        run = tmp_path / f"run{i}"
        run.mkdir()
        doc = _doc(method, i, [0.9, 0.8, 0.7], [0.9, 0.85, 0.8])
        (run / "metrics.json").write_text(json.dumps(doc))
    paths = write_report([str(tmp_path / "run0"), str(tmp_path / "run1")],
                         str(tmp_path / "out"))
    for key in ("sessions_csv", "final_csv", "joint_png", "base_png"):
        import os

        assert os.path.getsize(paths[key]) > 0
    with open(paths["joint_png"], "rb") as fh:
        assert fh.read(8) == b"\x89PNG\r\n\x1a\n"
