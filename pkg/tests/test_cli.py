import copy
import json
from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_array_equal

import run.execution.executor as executor_module
from conftest import SCALAR_SCENARIO, make_scalar_problem, write_scenario
from run.config import (EXIT_INPUT_ERROR, EXIT_OK, EXIT_SOLVER_FAILURE, EXIT_VALIDATION_FAILURE, LOG_FILE_NAME,
                        SCENARIOS_DIR)
from run.main import main
from run.planning.solver import solve, straight_line_seed
from run.utils.file_utils import read_plan, read_table, write_plan

ZERO_NOISE = str(SCENARIOS_DIR / "zero_noise.json")
UNIT_SQUARE = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]


def test_plan_writes_plan_file(tmp_path, scalar_scenario_path):
    out = tmp_path / "plan.csv"
    assert main(["plan", "--scenario", str(scalar_scenario_path), "--out", str(out)]) == EXIT_OK
    frame, metadata = read_table(out)
    assert len(frame) == 5
    assert metadata["converged"] == "true"
    assert metadata["horizon"] == "4"
    assert np.isnan(frame["u0"].iloc[-1])
    assert (tmp_path / "config.json").exists()
    assert (tmp_path / LOG_FILE_NAME).exists()


def test_plan_file_round_trip_is_exact(tmp_path, quick_options):
    problem = make_scalar_problem()
    result = solve(problem, straight_line_seed(problem), quick_options)
    write_plan(tmp_path / "plan.csv", result, {"scenario": "scalar"})
    trajectory, metadata = read_plan(tmp_path / "plan.csv")
    assert_array_equal(trajectory.states, result.trajectory.states)
    assert_array_equal(trajectory.controls, result.trajectory.controls)
    assert float(metadata["cost"]) == result.cost


def test_malformed_scenario_exits_with_input_error(tmp_path):
    scenario = tmp_path / "bad.json"
    scenario.write_text('{"horizon": 0}', encoding="utf-8")
    out = tmp_path / "plan.csv"
    assert main(["plan", "--scenario", str(scenario), "--out", str(out)]) == EXIT_INPUT_ERROR
    assert not out.exists()


def test_missing_scenario_exits_with_input_error(tmp_path):
    out = tmp_path / "plan.csv"
    assert main(["plan", "--scenario", str(tmp_path / "absent.json"), "--out", str(out)]) == EXIT_INPUT_ERROR


def test_plan_with_svg(tmp_path):
    svg = tmp_path / "plan.svg"
    code = main(["plan", "--scenario", ZERO_NOISE, "--out", str(tmp_path / "plan.csv"), "--svg", str(svg)])
    assert code == EXIT_OK
    assert svg.read_text(encoding="utf-8").lstrip().startswith("<?xml")


def test_execute_zero_noise_reaches_goal_reproducibly(tmp_path):
    first, second = tmp_path / "a" / "trace.csv", tmp_path / "b" / "trace.csv"
    assert main(["execute", "--scenario", ZERO_NOISE, "--out", str(first), "--seed", "5"]) == EXIT_OK
    assert main(["execute", "--scenario", ZERO_NOISE, "--out", str(second), "--seed", "5"]) == EXIT_OK
    frame, metadata = read_table(first)
    assert metadata["status"] == "goal_reached"
    assert metadata["replans"] == "0"
    assert len(frame) == 5
    assert first.read_bytes() == second.read_bytes()


def test_execute_from_plan_file(tmp_path):
    plan = tmp_path / "plan.csv"
    assert main(["plan", "--scenario", ZERO_NOISE, "--out", str(plan)]) == EXIT_OK
    out = tmp_path / "trace.csv"
    assert main(["execute", "--scenario", ZERO_NOISE, "--plan", str(plan), "--out", str(out)]) == EXIT_OK
    frame, metadata = read_table(out)
    assert metadata["status"] == "goal_reached"
    assert frame["replanned"].iloc[0] == 1


def test_execute_plan_with_wrong_dimensions(tmp_path, scalar_scenario_path):
    plan = tmp_path / "plan.csv"
    assert main(["plan", "--scenario", str(scalar_scenario_path), "--out", str(plan)]) == EXIT_OK
    code = main(["execute", "--scenario", ZERO_NOISE, "--plan", str(plan), "--out", str(tmp_path / "t.csv")])
    assert code == EXIT_INPUT_ERROR


def test_execute_batch_writes_per_seed_files(tmp_path, scalar_scenario_path):
    out = tmp_path / "trace.csv"
    code = main(["execute", "--scenario", str(scalar_scenario_path), "--out", str(out), "--seeds", "2"])
    assert code == EXIT_OK
    assert (tmp_path / "trace_seed3.csv").exists()
    assert (tmp_path / "trace_seed4.csv").exists()
    summary, metadata = read_table(tmp_path / "trace_summary.csv")
    assert summary["runs"].iloc[0] == 2
    assert metadata["seeds"] == "3,4"
    with open(tmp_path / "batch_summary.json", encoding="utf-8") as f:
        assert json.load(f)["seeds"] == [3, 4]


def test_aborted_execution_writes_trace_and_exits_with_solver_failure(tmp_path, monkeypatch):
    solve = executor_module.solve
    monkeypatch.setattr(executor_module, "solve", lambda *a, **k: replace(solve(*a, **k), converged=False))
    document = copy.deepcopy(SCALAR_SCENARIO)
    document["execution"]["max_planner_failures"] = 1
    out = tmp_path / "trace.csv"
    code = main(["execute", "--scenario", str(write_scenario(tmp_path, document)), "--out", str(out)])
    assert code == EXIT_SOLVER_FAILURE
    frame, metadata = read_table(out)
    assert metadata["status"] == "aborted"
    assert len(frame) == 0


def _vertex_file(tmp_path, content):
    path = tmp_path / "vertices.json"
    path.write_text(content, encoding="utf-8")
    return str(path)


def test_mvee_unit_square(tmp_path):
    out = tmp_path / "ellipsoids.csv"
    vertices = _vertex_file(tmp_path, json.dumps({"polygons": [UNIT_SQUARE]}))
    assert main(["mvee", vertices, "--radius", "0.0", "--out", str(out)]) == EXIT_OK
    frame, metadata = read_table(out)
    assert frame["cx"].iloc[0] == pytest.approx(0.5, abs=1e-9)
    assert frame["E11"].iloc[0] == pytest.approx(2.0, abs=1e-6)
    assert frame["E12"].iloc[0] == pytest.approx(0.0, abs=1e-6)
    assert float(metadata["inflation_radius"]) == 0.0


def test_mvee_inflation_grows_the_ellipse(tmp_path):
    vertices = _vertex_file(tmp_path, json.dumps([UNIT_SQUARE]))
    assert main(["mvee", vertices, "--radius", "0.1", "--out", str(tmp_path / "e.csv")]) == EXIT_OK
    frame, _ = read_table(tmp_path / "e.csv")
    assert frame["E11"].iloc[0] < 2.0


@pytest.mark.parametrize("content", ["", "   ", "[[[0, 0], [1, 0]]]", "{\"polygons\": []}", "{not json"])
def test_mvee_bad_vertex_files(tmp_path, content):
    out = tmp_path / "e.csv"
    assert main(["mvee", _vertex_file(tmp_path, content), "--out", str(out)]) == EXIT_INPUT_ERROR
    assert not out.exists()


def test_validate_passes(tmp_path):
    out = tmp_path / "report.json"
    args = ["validate", "--out", str(out), "--systems", "3", "--realizations", "10", "--samples", "20000",
            "--horizon", "4"]
    assert main(args) == EXIT_OK
    with open(out, encoding="utf-8") as f:
        assert json.load(f)["passed"] is True


def test_validate_with_injected_fault_fails(tmp_path, capsys):
    out = tmp_path / "report.json"
    args = ["validate", "--out", str(out), "--systems", "2", "--realizations", "5", "--samples", "2000",
            "--horizon", "4", "--inject-fault"]
    assert main(args) == EXIT_VALIDATION_FAILURE
    with open(out, encoding="utf-8") as f:
        report = json.load(f)
    assert report["fault_injected"] is True
    assert report["failures"]
    assert "FAIL" in capsys.readouterr().out
