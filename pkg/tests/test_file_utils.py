import json

import numpy as np
import pandas as pd

from run.evaluation.evaluator import ExecutionEvaluator
from run.utils.file_utils import ensure_directory, read_table, write_json, write_table


def test_ensure_directory_creates_nested_path(tmp_path):
    target = tmp_path / "a" / "b" / "c"
    assert ensure_directory(target) == target
    assert target.is_dir()
    # 이미 있으면 그대로
    assert ensure_directory(target) == target


def test_writers_create_missing_directories(tmp_path):
    table = tmp_path / "nested" / "plans" / "plan.csv"
    write_table(table, pd.DataFrame({"t": [0, 1], "x0": [0.1, np.nan]}), {"converged": True})
    frame, metadata = read_table(table)
    assert metadata["converged"] == "true"
    assert frame["x0"].iloc[0] == 0.1
    assert np.isnan(frame["x0"].iloc[1])

    document = tmp_path / "deeper" / "still" / "report.json"
    write_json(document, {"passed": False})
    with open(document, encoding="utf-8") as f:
        assert json.load(f) == {"passed": False}


def test_evaluator_creates_results_directory(tmp_path):
    results_dir = tmp_path / "runs" / "batch"
    summary = ExecutionEvaluator(results_dir).evaluate_batch([])
    assert summary["runs"] == 0
    assert (results_dir / "batch_summary.json").exists()
