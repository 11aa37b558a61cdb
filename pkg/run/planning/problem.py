"""
결정론적 계획 문제 정의와 비용 함수

비용 = sum_{t=1..K} [ tr(W_t P+_t W_t^T) + u_{t-1}^T W^u_t u_{t-1} ] + w_obs sum_t obstacle_cost(x_{t-1}, x_t)
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from run.belief.gaussian_belief import CostWeights, propagate_nominal_covariance
from run.config import (OBSTACLE_WEIGHT, SOLVER_ARMIJO, SOLVER_BACKTRACK, SOLVER_CONVERGENCE_TOL,
                        SOLVER_GRADIENT_STEP, SOLVER_MAX_BACKTRACKS, SOLVER_MAX_ITERATIONS,
                        SOLVER_OUTER_ROUNDS, SOLVER_PENALTY_GROWTH, SOLVER_PENALTY_INITIAL)
from run.obstacles.barrier import ObstacleSet, trajectory_obstacle_cost
from run.planning.trajectory import NominalTrajectory, propagate_nominal
from run.utils.errors import ConfigurationError, EvaluationError, GradientError, NumericalError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlanningProblem:
    """
    초기 신뢰, 목표 영역, 가중치, 장애물로 구성된 계획 문제

    body_points는 로봇 좌표계에서 로봇을 덮는 공의 중심 오프셋이다 (기본: 중심점 하나).
    """

    motion: object
    obs: object
    noise: object
    x0_mean: np.ndarray
    p0: np.ndarray
    weights: CostWeights
    goal: np.ndarray
    goal_radius: float
    control_radius: float
    horizon: int
    obstacles: Optional[ObstacleSet] = None
    obstacle_weight: float = OBSTACLE_WEIGHT
    body_points: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigurationError(f"horizon must be >= 1, got {self.horizon}")
        if self.goal_radius <= 0 or self.control_radius <= 0:
            raise ConfigurationError("goal_radius and control_radius must be positive")
        if self.obstacle_weight < 0:
            raise ConfigurationError(f"obstacle_weight must be non-negative, got {self.obstacle_weight}")
        if self.weights.horizon != self.horizon:
            raise ConfigurationError(f"weights cover {self.weights.horizon} steps, horizon is {self.horizon}")
        n = self.motion.state_dim
        x0 = np.atleast_1d(np.asarray(self.x0_mean, dtype=float))
        goal = np.atleast_1d(np.asarray(self.goal, dtype=float))
        p0 = np.atleast_2d(np.asarray(self.p0, dtype=float))
        if x0.size != n or goal.size != n or p0.shape != (n, n):
            raise ConfigurationError(f"initial belief / goal do not match state dimension {n}")
        body = np.zeros((1, self.motion.position_dims)) if self.body_points is None else self.body_points
        object.__setattr__(self, "x0_mean", x0)
        object.__setattr__(self, "goal", goal)
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "body_points", np.atleast_2d(np.asarray(body, dtype=float)))

    @property
    def control_dim(self):
        return self.motion.control_dim

    def with_initial_belief(self, mean, covariance):
        """재계획용: 현재 신뢰에서 시작하는 같은 문제"""
        return replace(self, x0_mean=np.asarray(mean, dtype=float), p0=np.asarray(covariance, dtype=float))

    def body_positions(self, states):
        """
        각 상태에서 공 중심의 위치 (body_points 개수, K+1, d)

        평면 위치에 방향 성분이 있으면 heading만큼 회전시킨다.
        """
        dims = self.motion.position_dims
        positions = states[:, :dims]
        if dims == 2 and states.shape[1] > 2 and np.any(self.body_points):
            heading = states[:, 2]
            cos, sin = np.cos(heading), np.sin(heading)
            offsets = self.body_points
            moved = [positions + np.column_stack([cos * ox - sin * oy, sin * ox + cos * oy])
                     for ox, oy in offsets]
            return np.stack(moved)
        return positions[None, :, :] + self.body_points[:, None, :]


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = SOLVER_MAX_ITERATIONS
    gradient_step: float = SOLVER_GRADIENT_STEP
    penalty_initial: float = SOLVER_PENALTY_INITIAL
    penalty_growth: float = SOLVER_PENALTY_GROWTH
    outer_rounds: int = SOLVER_OUTER_ROUNDS
    convergence_tol: float = SOLVER_CONVERGENCE_TOL
    armijo: float = SOLVER_ARMIJO
    backtrack: float = SOLVER_BACKTRACK
    max_backtracks: int = SOLVER_MAX_BACKTRACKS

    def __post_init__(self):
        for name in ("max_iterations", "gradient_step", "penalty_initial", "outer_rounds",
                     "convergence_tol", "armijo", "backtrack", "max_backtracks"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"solver option {name} must be positive")
        if self.penalty_growth <= 1:
            raise ConfigurationError(f"penalty_growth must be > 1, got {self.penalty_growth}")
        if self.backtrack >= 1:
            raise ConfigurationError(f"backtrack factor must be < 1, got {self.backtrack}")


@dataclass(frozen=True)
class CostBreakdown:
    estimation: float
    control: float
    obstacle: float
    covariance_traces: Tuple[float, ...] = ()

    @property
    def total(self):
        return self.estimation + self.control + self.obstacle


@dataclass(frozen=True)
class PlanResult:
    trajectory: NominalTrajectory
    cost: float
    constraint_violation: float
    iterations: int
    converged: bool
    merit_history: List[float] = field(default_factory=list)
    breakdown: Optional[CostBreakdown] = None
    seed_trajectory: Optional[NominalTrajectory] = None
    candidate_costs: Tuple[float, ...] = ()


def as_control_matrix(problem, controls):
    return np.asarray(controls, dtype=float).reshape(problem.horizon, problem.control_dim)


def rollout(problem, controls):
    return propagate_nominal(problem.x0_mean, as_control_matrix(problem, controls), problem.motion)


def cost_breakdown(problem, controls):
    """
    추정/제어/장애물 비용 분해

    Args:
        problem: PlanningProblem
        controls: K개의 제어 (평탄화 벡터 가능)

    Returns:
        CostBreakdown (total == plan_cost)
    """
    trajectory = rollout(problem, controls)
    steps = propagate_nominal_covariance(trajectory, problem.motion, problem.obs, problem.noise, problem.p0)
    weights = problem.weights
    traces = tuple(float(np.trace(w @ step.p_plus @ w.T)) for w, step in zip(weights.w_chol, steps))
    control = float(sum(u @ w_u @ u for u, w_u in zip(trajectory.controls, weights.w_u)))
    obstacle = 0.0
    if problem.obstacles is not None and len(problem.obstacles) and problem.obstacle_weight > 0:
        obstacle = problem.obstacle_weight * sum(
            trajectory_obstacle_cost(problem.obstacles, path) for path in problem.body_positions(trajectory.states))
    return CostBreakdown(estimation=float(sum(traces)), control=control, obstacle=float(obstacle),
                         covariance_traces=traces)


def plan_cost(problem, controls):
    """계획 목적 함수 값 (controls의 순수 함수)"""
    return cost_breakdown(problem, controls).total


def constraint_residuals(problem, trajectory):
    """
    (종단 잔차, 시점별 제어 크기 잔차)

    종단: max(0, ||x_K - x_g|| - r_g), 제어: max(0, ||u_t|| - r_u)
    """
    terminal = max(0.0, float(np.linalg.norm(trajectory.states[-1] - problem.goal)) - problem.goal_radius)
    controls = np.maximum(0.0, np.linalg.norm(trajectory.controls, axis=1) - problem.control_radius)
    return terminal, controls


def constraint_violation(problem, trajectory):
    terminal, controls = constraint_residuals(problem, trajectory)
    return max(terminal, float(controls.max(initial=0.0)))


def numerical_gradient(fn, vector, step=SOLVER_GRADIENT_STEP):
    """
    좌표별 중앙 차분 gradient

    Args:
        fn: 벡터 -> 스칼라 함수
        vector: 미분 위치
        step: 상대 간격 (좌표 i의 간격은 step * (1 + |v_i|))

    Returns:
        gradient 벡터 (평가 실패 시 좌표를 담은 GradientError)
    """
    vector = np.asarray(vector, dtype=float).ravel()
    gradient = np.empty_like(vector)
    for i in range(vector.size):
        h = step * (1.0 + abs(vector[i]))
        plus, minus = vector.copy(), vector.copy()
        plus[i] += h
        minus[i] -= h
        try:
            forward, backward = fn(plus), fn(minus)
        except (EvaluationError, NumericalError) as e:
            raise GradientError(f"cost evaluation failed while differencing: {e}", coordinate=i) from e
        if not (np.isfinite(forward) and np.isfinite(backward)):
            raise GradientError("non-finite perturbed cost", coordinate=i)
        gradient[i] = (forward - backward) / (2.0 * h)
    return gradient


def cost_gradient(problem, controls, step=SOLVER_GRADIENT_STEP):
    """plan_cost의 K * n_u 차원 유한 차분 gradient"""
    return numerical_gradient(lambda u: plan_cost(problem, u), controls, step)
