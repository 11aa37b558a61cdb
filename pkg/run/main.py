"""
T-LQG 신뢰 공간 경로 계획 실험 메인 스크립트

서브커맨드:
    plan      시나리오에서 o-traj 계획 후 계획 파일 저장
    execute   T-LQG 폐루프 실행 (단일 시드 또는 --seeds N 배치)
    validate  오차 전파 폐형식과 비용 오차 정리 검증
    mvee      다각형 꼭짓점 파일에서 팽창 + MVEE 타원체 계산
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pandas as pd
from colorama import Fore, Style
from colorama import init as colorama_init

from run.analysis.validation import run_validation_suite
from run.belief.gaussian_belief import propagate_nominal_covariance
from run.config import (BATCH_WORKERS, DEFAULT_SEED, EXIT_INPUT_ERROR, EXIT_OK, EXIT_SOLVER_FAILURE,
                        EXIT_VALIDATION_FAILURE, LOG_FILE_NAME, LOG_FORMAT, LOG_LEVEL, RESULTS_DIR,
                        VALIDATION_HORIZON, VALIDATION_REALIZATIONS, VALIDATION_SAMPLES, VALIDATION_SYSTEMS)
from run.evaluation.evaluator import ExecutionEvaluator
from run.execution.executor import STATUS_ABORTED, run_batch, run_tlqg
from run.obstacles.ellipsoid import polygon_ellipsoid
from run.planning.problem import constraint_residuals
from run.planning.solver import solve_best_of
from run.utils.errors import ConfigurationError, PlanningInputError, ScenarioError, TlqgError
from run.utils.file_utils import (ensure_directory, read_file, read_plan, write_json, write_plan, write_table,
                                  write_trace)
from run.utils.plotting import plot_execution, plot_plan
from run.utils.scenario import load_scenario

logger = logging.getLogger(__name__)


def setup_logging(out_dir):
    """out_dir/run.log 와 stderr 로 로그 출력"""
    ensure_directory(out_dir)
    logging.basicConfig(
        level=LOG_LEVEL,
        format=LOG_FORMAT,
        handlers=[
            logging.FileHandler(out_dir / LOG_FILE_NAME),
            logging.StreamHandler(sys.stderr)
        ],
        force=True
    )


def parse_args(argv=None):
    """명령줄 인수 파싱"""
    parser = argparse.ArgumentParser(description="T-LQG 신뢰 공간 경로 계획 실험")
    subparsers = parser.add_subparsers(dest="command", required=True)

    plan = subparsers.add_parser("plan", help="o-traj 계획")
    plan.add_argument("--scenario", type=str, required=True, help="시나리오 JSON 파일")
    plan.add_argument("--out", type=str, default=str(RESULTS_DIR / "plan.csv"), help="계획 파일 경로")
    plan.add_argument("--seed", type=int, default=None, help="난수 시드 (기본: 시나리오 값)")
    plan.add_argument("--svg", type=str, default=None, help="SVG 그림 경로")
    plan.set_defaults(handler=run_plan)

    execute = subparsers.add_parser("execute", help="T-LQG 폐루프 실행")
    execute.add_argument("--scenario", type=str, required=True, help="시나리오 JSON 파일")
    execute.add_argument("--plan", type=str, default=None, help="계획 파일 (없으면 내부에서 계획)")
    execute.add_argument("--out", type=str, default=str(RESULTS_DIR / "trace.csv"), help="실행 기록 파일 경로")
    execute.add_argument("--seed", type=int, default=None, help="난수 시드 (기본: 시나리오 값)")
    execute.add_argument("--seeds", type=int, default=None,
                         help="배치 실행 시드 수 N (seed..seed+N-1, 시드별 파일 + 요약)")
    execute.add_argument("--svg", type=str, default=None, help="SVG 그림 경로 (배치에서는 첫 시드)")
    execute.set_defaults(handler=run_execute)

    validate = subparsers.add_parser("validate", help="오차 전파 검증")
    validate.add_argument("--out", type=str, default=str(RESULTS_DIR / "validation_report.json"),
                          help="검증 보고서 경로")
    validate.add_argument("--seed", type=int, default=DEFAULT_SEED, help="난수 시드")
    validate.add_argument("--systems", type=int, default=VALIDATION_SYSTEMS, help="무작위 시스템 수")
    validate.add_argument("--realizations", type=int, default=VALIDATION_REALIZATIONS, help="시스템당 실현 수")
    validate.add_argument("--samples", type=int, default=VALIDATION_SAMPLES, help="Monte Carlo 샘플 수")
    validate.add_argument("--horizon", type=int, default=VALIDATION_HORIZON, help="시스템 horizon K")
    validate.add_argument("--inject-fault", action="store_true", dest="inject_fault",
                          help="잘못된 LQR 이득 주입 (음성 대조군)")
    validate.set_defaults(handler=run_validate)

    geometry = subparsers.add_parser("mvee", help="다각형 -> 팽창 + MVEE 타원체")
    geometry.add_argument("vertices", type=str, help="꼭짓점 JSON 파일 (다각형 리스트 또는 {\"polygons\": ...})")
    geometry.add_argument("--radius", type=float, default=0.0, help="팽창 반지름")
    geometry.add_argument("--out", type=str, default=str(RESULTS_DIR / "ellipsoids.csv"), help="타원체 파일 경로")
    geometry.set_defaults(handler=run_mvee)

    return parser.parse_args(argv)


def _load(args):
    scenario = load_scenario(args.scenario)
    return scenario, (args.seed if args.seed is not None else scenario.seed)


def _plottable(scenario):
    return scenario.problem.motion.position_dims >= 2


def run_plan(args):
    """
    plan 서브커맨드

    Returns:
        종료 코드 (수렴 실패 시 계획 파일은 저장하고 3)
    """
    scenario, _ = _load(args)
    problem = scenario.problem

    logger.info(f"========== Planning: {scenario.name} ==========")
    result = solve_best_of(problem, scenario.seed_controls(), scenario.solver_options)
    terminal, _ = constraint_residuals(problem, result.trajectory)

    ellipsoids = problem.obstacles.ellipsoids if problem.obstacles is not None else ()
    metadata = {
        "scenario": scenario.name,
        "state_dim": problem.motion.state_dim,
        "control_dim": problem.control_dim,
        "horizon": problem.horizon,
        "terminal_residual": float(np.linalg.norm(result.trajectory.states[-1] - problem.goal)),
    }
    if ellipsoids:
        metadata["ellipsoid"] = [e.to_row() for e in ellipsoids]
    write_plan(args.out, result, metadata)

    if args.svg and _plottable(scenario):
        steps = propagate_nominal_covariance(result.trajectory, problem.motion, problem.obs, problem.noise,
                                             problem.p0)
        plot_plan(args.svg, scenario, result, [problem.p0] + [step.p_plus for step in steps])

    logger.info(f"cost={result.cost:.6g}, terminal constraint={terminal:.3e}, "
                f"violation={result.constraint_violation:.3e}, converged={result.converged}")
    return EXIT_OK if result.converged else EXIT_SOLVER_FAILURE


def _initial_trajectory(args, scenario):
    if not args.plan:
        return None
    trajectory, metadata = read_plan(args.plan)
    problem = scenario.problem
    if trajectory.states.shape != (problem.horizon + 1, problem.motion.state_dim) \
            or trajectory.controls.shape[1] != problem.control_dim:
        raise ConfigurationError(f"plan file {args.plan} does not match scenario dimensions")
    if not np.allclose(trajectory.states[0], problem.x0_mean):
        logger.warning("plan file starts away from the scenario's initial mean")
    logger.info(f"loaded plan from {args.plan} (cost={metadata.get('cost')})")
    return trajectory


def run_execute(args):
    """
    execute 서브커맨드

    Returns:
        종료 코드 (중단된 실행이 있으면 3)
    """
    scenario, seed = _load(args)
    trajectory = _initial_trajectory(args, scenario)
    out = Path(args.out)

    if args.seeds is None:
        logger.info(f"========== Executing: {scenario.name}, seed {seed} ==========")
        config = replace(scenario.exec_config, seed=seed)
        trace = run_tlqg(scenario.problem, config, scenario.solver_options, trajectory)
        write_trace(out, trace, {"scenario": scenario.name})
        if args.svg and _plottable(scenario):
            plot_execution(args.svg, scenario, trace)
        return EXIT_SOLVER_FAILURE if trace.status == STATUS_ABORTED else EXIT_OK

    if args.seeds < 1:
        raise ConfigurationError(f"--seeds must be >= 1, got {args.seeds}")
    seeds = list(range(seed, seed + args.seeds))
    logger.info(f"========== Executing: {scenario.name}, {len(seeds)} seeds ==========")
    traces = run_batch(scenario.problem, scenario.exec_config, scenario.solver_options, seeds,
                       workers=BATCH_WORKERS, initial_trajectory=trajectory)
    for trace in traces:
        write_trace(out.with_name(f"{out.stem}_seed{trace.seed}{out.suffix}"), trace, {"scenario": scenario.name})
    summary = ExecutionEvaluator(out.parent).evaluate_batch(traces)
    row = {key: summary[key] for key in ("runs", "reached", "reach_rate", "aborted", "mean_replans", "mean_steps")}
    write_table(out.with_name(f"{out.stem}_summary{out.suffix}"), pd.DataFrame([row]),
                {"scenario": scenario.name, "seeds": seeds})
    if args.svg and _plottable(scenario):
        plot_execution(args.svg, scenario, traces[0])
    return EXIT_SOLVER_FAILURE if summary["aborted"] else EXIT_OK


def _failed(report, name):
    return any(failure.startswith(name) for failure in report.failures)


def _status(ok):
    return f"{Fore.GREEN}PASS{Style.RESET_ALL}" if ok else f"{Fore.RED}FAIL{Style.RESET_ALL}"


def run_validate(args):
    """
    validate 서브커맨드: 보고서 출력 후 실패 항목이 있으면 1
    """
    logger.info("========== Validation suite ==========")
    report = run_validation_suite(seed=args.seed, systems=args.systems, realizations=args.realizations,
                                  samples=args.samples, inject_fault=args.inject_fault, horizon=args.horizon)
    write_json(args.out, report.to_dict())

    for name, residual in report.lemma_residuals.items():
        print(f"{_status(not _failed(report, name))} {name}: max residual {residual:.3e}")
    print(f"{_status(not _failed(report, 'lemma5'))} lemma5: max residual {report.lemma5_residual:.3e}")
    print(f"{_status(not _failed(report, 'theorem1'))} theorem1: mean={report.theorem1_mean:.3e}, "
          f"SE={report.theorem1_se:.3e}")
    print(f"{_status(not _failed(report, 'negative control'))} negative control: mean={report.negative_control_mean:.3e}, "
          f"SE={report.negative_control_se:.3e}")
    mean, se, analytic = report.trace_identity
    print(f"{_status(not _failed(report, 'trace identity'))} trace identity: mean={mean:.6g}, "
          f"SE={se:.3e}, analytic={analytic:.6g}")

    if not report.passed:
        logger.error(f"validation failed: {'; '.join(report.failures)}")
        return EXIT_VALIDATION_FAILURE
    logger.info("validation passed")
    return EXIT_OK


def _read_polygons(path):
    content = read_file(path)
    if not content.strip():
        raise ScenarioError(f"vertex file is empty: {path}")
    try:
        document = json.loads(content)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"invalid JSON ({e.msg}) at line {e.lineno}, column {e.colno}")
    polygons = document.get("polygons") if isinstance(document, dict) else document
    if not polygons:
        raise ScenarioError("no polygons in vertex file", "polygons")
    return [np.asarray(polygon, dtype=float) for polygon in polygons]


def run_mvee(args):
    """
    mvee 서브커맨드: 다각형별 팽창 + MVEE 후 (c, E, 축 끝점) 저장
    """
    polygons = _read_polygons(args.vertices)
    logger.info(f"========== MVEE: {len(polygons)} polygons, radius={args.radius} ==========")
    rows = []
    for index, polygon in enumerate(polygons):
        if polygon.ndim != 2 or polygon.shape[0] < 3 or polygon.shape[1] != 2:
            raise ScenarioError("a polygon needs at least 3 planar vertices", f"polygons/{index}")
        ellipsoid = polygon_ellipsoid(polygon, args.radius)
        (zeta1, zeta2), (xi1, xi2) = ellipsoid.axes
        cx, cy, e11, e12, e22 = ellipsoid.to_row()
        rows.append({"polygon": index, "cx": cx, "cy": cy, "E11": e11, "E12": e12, "E22": e22,
                     "zeta1_x": zeta1[0], "zeta1_y": zeta1[1], "zeta2_x": zeta2[0], "zeta2_y": zeta2[1],
                     "xi1_x": xi1[0], "xi1_y": xi1[1], "xi2_x": xi2[0], "xi2_y": xi2[1],
                     "regularized": int(ellipsoid.regularized), "iterations": ellipsoid.iterations})
        logger.info(f"polygon {index}: center=({cx:.4f}, {cy:.4f}), iterations={ellipsoid.iterations}")
    write_table(args.out, pd.DataFrame(rows), {"inflation_radius": args.radius})
    return EXIT_OK


def main(argv=None):
    """
    메인 함수

    Returns:
        종료 코드 (0 성공, 1 검증 실패, 2 입력 오류, 3 수렴 실패/실행 중단)
    """
    args = parse_args(argv)
    out_dir = Path(args.out).resolve().parent
    setup_logging(out_dir)
    colorama_init(autoreset=True)

    config = {key: value for key, value in vars(args).items() if key != "handler"}
    write_json(out_dir / "config.json", config)
    logger.info(f"Configuration: {config}")

    try:
        return args.handler(args)
    except (ConfigurationError, PlanningInputError, OSError) as e:
        logger.error(f"Input error: {e}", exc_info=True)
        return EXIT_INPUT_ERROR
    except TlqgError as e:
        logger.error(f"Numerical failure: {e}", exc_info=True)
        return EXIT_SOLVER_FAILURE


if __name__ == "__main__":
    sys.exit(main())
