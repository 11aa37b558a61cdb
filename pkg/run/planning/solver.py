"""
제어열 공간의 비선형 계획 문제 풀이

이차 벌점(quadratic penalty) 외부 루프 + BFGS 내부 하강 + Armijo 백트래킹 선 탐색.
각 외부 라운드가 끝날 때 선택 merit이 가장 낮은 반복점을 최선 반복점으로 유지한다.
선택 merit은 제약 위반이 허용 오차 이내이면 비용, 그렇지 않으면 비용 + 1e4 * 제약 위반 합이다.
merit_history는 라운드마다 최선 반복점의 선택 merit을 기록하므로 증가하지 않는다.
"""

import logging

import numpy as np

from run.config import SOLVER_EXACT_PENALTY, SOLVER_FEASIBILITY_TOL
from run.planning.problem import (PlanResult, SolverOptions, as_control_matrix, constraint_residuals,
                                  constraint_violation, cost_breakdown, numerical_gradient, plan_cost,
                                  rollout)
from run.utils.errors import EvaluationError, GradientError, NumericalError, PlanningInputError

logger = logging.getLogger(__name__)


def _penalty(problem, flat):
    trajectory = rollout(problem, flat)
    terminal, controls = constraint_residuals(problem, trajectory)
    return terminal ** 2 + float(np.sum(controls ** 2))


def _selection_merit(problem, flat):
    # 허용 오차 안의 실행 가능점은 벌점 없이 비용만
    try:
        trajectory = rollout(problem, flat)
        cost = plan_cost(problem, flat)
    except (EvaluationError, NumericalError):
        return np.inf
    if not np.isfinite(cost):
        return np.inf
    terminal, controls = constraint_residuals(problem, trajectory)
    if max(terminal, float(controls.max(initial=0.0))) <= SOLVER_FEASIBILITY_TOL:
        return cost
    return cost + SOLVER_EXACT_PENALTY * (terminal + float(controls.sum()))


def _safe(fn, flat):
    try:
        value = fn(flat)
    except (EvaluationError, NumericalError):
        return np.inf
    return value if np.isfinite(value) else np.inf


def _bfgs(merit, start, options, budget):
    """
    Armijo 백트래킹을 사용하는 BFGS

    gradient 계산이 실패하면 마지막으로 받아들인 점에서 멈춘다.

    Returns:
        (최종점, 최종 merit, 반복 횟수, 정지점 여부, gradient 실패 여부)
    """
    x = start.copy()
    f = merit(x)
    try:
        g = numerical_gradient(merit, x, options.gradient_step)
    except GradientError as e:
        logger.warning(f"gradient evaluation failed at the round start: {e}")
        return x, f, 0, False, True
    inverse_hessian = np.eye(x.size)
    iterations = 0
    while iterations < budget:
        if np.linalg.norm(g) <= options.convergence_tol * (1.0 + abs(f)):
            return x, f, iterations, True, False
        direction = -inverse_hessian @ g
        slope = g @ direction
        if slope >= 0:
            inverse_hessian = np.eye(x.size)
            direction = -g
            slope = -(g @ g)

        alpha = 1.0
        candidate_value = np.inf
        for _ in range(options.max_backtracks):
            candidate = x + alpha * direction
            candidate_value = _safe(merit, candidate)
            if candidate_value <= f + options.armijo * alpha * slope:
                break
            alpha *= options.backtrack
        else:
            # 선 탐색 실패: 유한 차분 정밀도 한계의 정지점
            return x, f, iterations, True, False

        try:
            g_new = numerical_gradient(merit, candidate, options.gradient_step)
        except GradientError as e:
            logger.warning(f"gradient evaluation failed after iteration {iterations + 1}: {e}")
            return candidate, candidate_value, iterations + 1, False, True
        s = candidate - x
        y = g_new - g
        sy = s @ y
        if sy > 1e-12:
            rho = 1.0 / sy
            identity = np.eye(x.size)
            inverse_hessian = ((identity - rho * np.outer(s, y)) @ inverse_hessian
                               @ (identity - rho * np.outer(y, s)) + rho * np.outer(s, s))
        decrease = f - candidate_value
        x, f, g = candidate, candidate_value, g_new
        iterations += 1
        if decrease <= 1e-14 * (1.0 + abs(f)):
            return x, f, iterations, True, False
    return x, f, iterations, False, False


def solve(problem, seed_controls, options=None):
    """
    제약 있는 계획 문제 풀이

    Args:
        problem: PlanningProblem
        seed_controls: 초기 제어열 (K, n_u)
        options: SolverOptions (None이면 기본값)

    Returns:
        PlanResult (수렴 실패나 gradient 실패 시 converged=False인 최선 반복점, 예외 아님)
    """
    options = options or SolverOptions()
    flat = as_control_matrix(problem, seed_controls).ravel().copy()
    seed_cost = _safe(lambda u: plan_cost(problem, u), flat)
    if not np.isfinite(seed_cost):
        raise PlanningInputError("seed controls produce a non-finite cost (rollout or covariance failure)")
    seed_trajectory = rollout(problem, flat)

    best_flat = flat.copy()
    best_merit = _selection_merit(problem, flat)
    best_stationary = False
    history = [best_merit]
    total_iterations = 0
    penalty_weight = options.penalty_initial
    current = flat
    gradient_failed = False

    logger.info(f"solver start: seed cost={seed_cost:.6g}, violation={constraint_violation(problem, seed_trajectory):.3e}")
    for round_index in range(options.outer_rounds):
        def merit(u, mu=penalty_weight):
            return plan_cost(problem, u) + mu * _penalty(problem, u)

        current, value, iterations, stationary, gradient_failed = _bfgs(merit, current, options,
                                                                        options.max_iterations)
        total_iterations += iterations
        selection = _selection_merit(problem, current)
        violation = constraint_violation(problem, rollout(problem, current))
        logger.info(f"round {round_index + 1}/{options.outer_rounds}: mu={penalty_weight:g}, "
                    f"merit={value:.6g}, violation={violation:.3e}, iterations={iterations}")
        if selection <= best_merit:
            best_merit, best_flat, best_stationary = selection, current.copy(), stationary
        history.append(best_merit)
        if gradient_failed:
            logger.warning(f"stopping after round {round_index + 1}: gradient evaluation failed")
            break
        if violation <= SOLVER_FEASIBILITY_TOL and stationary:
            break
        penalty_weight *= options.penalty_growth

    trajectory = rollout(problem, best_flat)
    violation = constraint_violation(problem, trajectory)
    converged = bool(violation <= SOLVER_FEASIBILITY_TOL and best_stationary and not gradient_failed)
    breakdown = cost_breakdown(problem, best_flat)
    if not converged:
        logger.warning(f"solver did not converge (violation={violation:.3e}, stationary={best_stationary})")
    return PlanResult(trajectory=trajectory, cost=breakdown.total, constraint_violation=violation,
                      iterations=total_iterations, converged=converged, merit_history=history,
                      breakdown=breakdown, seed_trajectory=seed_trajectory)


def _track_targets(problem, targets):
    """잡음 없는 모델의 최소 자승 역변환으로 목표 상태열을 추종하는 제어열"""
    motion = problem.motion
    state = problem.x0_mean.copy()
    zero = np.zeros(motion.control_dim)
    controls = np.zeros((problem.horizon, motion.control_dim))
    for t, target in enumerate(targets):
        _, B, _ = motion.jacobians(state, zero)
        drift = motion.evaluate(state, zero)
        control, *_ = np.linalg.lstsq(B, target - drift, rcond=None)
        norm = np.linalg.norm(control)
        if norm > problem.control_radius:
            control = control * (problem.control_radius / norm)
        controls[t] = control
        state = motion.evaluate(state, control)
    return controls


def straight_line_seed(problem):
    """x0에서 x_g까지 등간격 경유점을 추종하는 초기 제어열"""
    fractions = np.arange(1, problem.horizon + 1) / problem.horizon
    targets = problem.x0_mean + fractions[:, None] * (problem.goal - problem.x0_mean)
    return _track_targets(problem, targets)


def waypoint_seed(problem, waypoints):
    """
    x0 -> waypoints -> x_g 꺾은선을 호 길이 기준 K등분해 추종하는 초기 제어열

    Args:
        problem: PlanningProblem
        waypoints: 위치 좌표 경유점 목록

    Returns:
        (K, n_u) 제어열
    """
    dims = problem.motion.position_dims
    polyline = np.vstack([problem.x0_mean[:dims], np.atleast_2d(np.asarray(waypoints, dtype=float)),
                          problem.goal[:dims]])
    segment_lengths = np.linalg.norm(np.diff(polyline, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(segment_lengths)])
    fractions = np.arange(1, problem.horizon + 1) / problem.horizon
    if arc[-1] == 0:
        positions = np.repeat(polyline[:1], problem.horizon, axis=0)
    else:
        positions = np.column_stack([np.interp(fractions * arc[-1], arc, polyline[:, k]) for k in range(dims)])
    targets = problem.x0_mean + fractions[:, None] * (problem.goal - problem.x0_mean)
    targets[:, :dims] = positions
    return _track_targets(problem, targets)


def solve_best_of(problem, seeds, options=None):
    """
    여러 초기 제어열로 각각 풀고, 수렴한 결과 중 비용이 가장 낮은 것을 선택

    Returns:
        선택된 PlanResult (candidate_costs에 모든 후보 비용 기록)
    """
    results = []
    for index, seed in enumerate(seeds):
        logger.info(f"========== seed {index + 1}/{len(seeds)} ==========")
        results.append(solve(problem, seed, options))
    if not results:
        raise PlanningInputError("no seed trajectories supplied")
    best = min(results, key=lambda r: (not r.converged, r.cost))
    costs = tuple(r.cost for r in results)
    logger.info(f"candidate costs: {[f'{c:.6g}' for c in costs]}; chose {costs.index(best.cost) + 1}")
    return PlanResult(trajectory=best.trajectory, cost=best.cost, constraint_violation=best.constraint_violation,
                      iterations=best.iterations, converged=best.converged, merit_history=best.merit_history,
                      breakdown=best.breakdown, seed_trajectory=best.seed_trajectory, candidate_costs=costs)
