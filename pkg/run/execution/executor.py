"""
T-LQG 폐루프 실행: 실제 동역학 샘플링 -> 관측 -> 필터 -> 제어 -> 편차 감지 -> 재계획
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np
from tqdm import tqdm

from run.belief.belief_metrics import goal_probability, symmetric_kl_distance
from run.belief.filtering import LinearizationPoint, kf_mean_update
from run.belief.gaussian_belief import GaussianBelief
from run.config import (DEFAULT_SEED, GOAL_PROBABILITY, GOAL_SAMPLES, KL_COVARIANCE_FLOOR,
                        MAX_PLANNER_FAILURES, PLANNING_GOAL_MARGIN, REPLAN_THRESHOLD, STEP_BUDGET_FACTOR)
from run.control.lqr import build_policy, control_action
from run.planning.problem import SolverOptions
from run.planning.solver import solve, straight_line_seed
from run.utils.errors import ConfigurationError
from run.utils.numerics import make_rng, sample_gaussian

logger = logging.getLogger(__name__)

STATUS_GOAL_REACHED = "goal_reached"
STATUS_BUDGET_EXHAUSTED = "step_budget_exhausted"
STATUS_ABORTED = "aborted"


@dataclass(frozen=True)
class ExecutionConfig:
    """
    d_th: 재계획 임계값, p_g: 목표 확률 임계값, step_budget: 최대 스텝 (None이면 10K)

    goal_margin은 실행 중 계획에 사용하는 목표 반경 비율이다.
    """

    d_th: float = REPLAN_THRESHOLD
    p_g: float = GOAL_PROBABILITY
    step_budget: Optional[int] = None
    seed: int = DEFAULT_SEED
    goal_samples: int = GOAL_SAMPLES
    max_planner_failures: int = MAX_PLANNER_FAILURES
    goal_margin: float = PLANNING_GOAL_MARGIN

    def __post_init__(self):
        if self.d_th <= 0:
            raise ConfigurationError(f"d_th must be positive, got {self.d_th}")
        if not 0 < self.p_g < 1:
            raise ConfigurationError(f"p_g must lie in (0, 1), got {self.p_g}")
        if self.step_budget is not None and self.step_budget < 1:
            raise ConfigurationError(f"step_budget must be >= 1, got {self.step_budget}")
        if not 0 < self.goal_margin <= 1:
            raise ConfigurationError(f"goal_margin must lie in (0, 1], got {self.goal_margin}")

    def budget_for(self, horizon):
        return self.step_budget if self.step_budget is not None else STEP_BUDGET_FACTOR * horizon


@dataclass(frozen=True)
class StepRecord:
    step: int
    t: int
    true_state: np.ndarray
    estimate: np.ndarray
    covariance_trace: float
    control: np.ndarray
    observation: np.ndarray
    kl_distance: float
    replanned: bool
    planner_warning: bool = False


@dataclass
class ExecutionTrace:
    seed: int
    records: List[StepRecord] = field(default_factory=list)
    status: str = STATUS_BUDGET_EXHAUSTED
    replans: int = 0
    goal_probability: float = 0.0
    initial_state: Optional[np.ndarray] = None
    nominal_paths: List[np.ndarray] = field(default_factory=list)

    @property
    def steps(self):
        return len(self.records)

    @property
    def reached_goal(self):
        return self.status == STATUS_GOAL_REACHED


def simulate_step(true_state, control, motion, obs, noise, rng):
    """
    x_{t+1} = f(x_t, u_t, w_t), z_{t+1} = h(x_{t+1}, v_{t+1})

    w ~ N(0, S_w), v ~ N(0, S_v)를 독립적으로 추출 (rng 상태에 대해 결정적)
    """
    omega = sample_gaussian(np.zeros(motion.noise_dim), noise.sigma_omega, rng)
    nu = sample_gaussian(np.zeros(obs.noise_dim), noise.sigma_nu, rng)
    next_state = motion.evaluate(true_state, control, omega)
    return next_state, obs.evaluate(next_state, nu)


def _floored(belief):
    floor = KL_COVARIANCE_FLOOR * np.eye(belief.dim)
    return GaussianBelief(belief.mean, belief.covariance + floor)


def detect_deviation(current, nominal, d_th):
    """
    d = symmetric_kl_distance(current, nominal), deviated = d > d_th

    두 공분산에 1e-9 I를 더해 잡음이 없는 경우에도 거리가 정의되도록 한다.
    """
    d = symmetric_kl_distance(_floored(current), _floored(nominal))
    return d, bool(d > d_th)


def _plan(problem, belief, options, exec_config):
    replanning = replace(problem.with_initial_belief(belief.mean, belief.covariance),
                         goal_radius=problem.goal_radius * exec_config.goal_margin)
    result = solve(replanning, straight_line_seed(replanning), options)
    policy = build_policy(result.trajectory, problem.motion, problem.obs, problem.noise,
                          problem.weights, belief.covariance)
    return result, policy


def run_tlqg(problem, exec_config=None, options=None, initial_trajectory=None):
    """
    T-LQG 실행 루프

    Args:
        problem: PlanningProblem
        exec_config: ExecutionConfig
        options: SolverOptions
        initial_trajectory: 첫 계획으로 사용할 o-traj (None이면 현재 신뢰에서 계획)

    Returns:
        ExecutionTrace (status: goal_reached | step_budget_exhausted | aborted)
    """
    exec_config = exec_config or ExecutionConfig()
    options = options or SolverOptions()
    rng = make_rng(exec_config.seed)
    motion, obs, noise = problem.motion, problem.obs, problem.noise
    budget = exec_config.budget_for(problem.horizon)

    true_state = sample_gaussian(problem.x0_mean, problem.p0, rng)
    belief = GaussianBelief(problem.x0_mean, problem.p0)
    trace = ExecutionTrace(seed=exec_config.seed, initial_state=true_state.copy())

    policy = None
    t = 0
    deviated = False
    failures = 0
    plans = 0
    while True:
        probability = goal_probability(belief, problem.goal, problem.goal_radius,
                                       samples=exec_config.goal_samples,
                                       seed=[exec_config.seed, trace.steps], dims=motion.position_dims)
        trace.goal_probability = probability
        if probability > exec_config.p_g:
            trace.status = STATUS_GOAL_REACHED
            break
        if trace.steps >= budget:
            trace.status = STATUS_BUDGET_EXHAUSTED
            break

        replanned = False
        warning = False
        if policy is None and initial_trajectory is not None:
            policy = build_policy(initial_trajectory, motion, obs, noise, problem.weights, belief.covariance)
            plans += 1
            replanned = True
            trace.nominal_paths.append(initial_trajectory.states.copy())
        elif policy is None or deviated or t == policy.horizon:
            result, policy = _plan(problem, belief, options, exec_config)
            plans += 1
            replanned = True
            t = 0
            trace.nominal_paths.append(result.trajectory.states.copy())
            if result.converged:
                failures = 0
            else:
                failures += 1
                warning = True
                logger.warning(f"planner did not converge ({failures} consecutive); executing best iterate")
                if failures >= exec_config.max_planner_failures:
                    trace.status = STATUS_ABORTED
                    logger.error(f"aborting after {failures} consecutive planner failures")
                    break

        control = control_action(policy, t, belief.mean)
        true_state, observation = simulate_step(true_state, control, motion, obs, noise, rng)
        nominal = policy.nominal
        lin = LinearizationPoint.from_models(motion, obs, nominal.states[t], nominal.controls[t],
                                             nominal.states[t + 1])
        mean = kf_mean_update(belief, control, observation, lin, policy.update_gains[t], obs.angle_indices)
        belief = GaussianBelief(mean, policy.covariances[t + 1])
        t += 1
        d, deviated = detect_deviation(belief, GaussianBelief(nominal.states[t], policy.covariances[t]),
                                       exec_config.d_th)
        trace.records.append(StepRecord(step=trace.steps, t=t, true_state=true_state.copy(), estimate=mean.copy(),
                                        covariance_trace=float(np.trace(belief.covariance)),
                                        control=np.asarray(control, dtype=float).copy(),
                                        observation=np.asarray(observation, dtype=float).copy(),
                                        kl_distance=float(d), replanned=replanned, planner_warning=warning))
        logger.debug(f"step {trace.steps}: t={t}, d={d:.4g}, deviated={deviated}")

    trace.replans = max(plans - 1, 0)
    logger.info(f"execution finished: status={trace.status}, steps={trace.steps}, replans={trace.replans}, "
                f"P(goal)={trace.goal_probability:.3f}")
    return trace


def run_batch(problem, exec_config, options, seeds, workers=1, initial_trajectory=None):
    """
    독립적인 시드별 실행 (각 실행이 자체 난수 생성기를 소유)

    Returns:
        seeds 순서의 ExecutionTrace 리스트
    """
    configs = [replace(exec_config, seed=int(seed)) for seed in seeds]
    disable = not logger.isEnabledFor(logging.INFO)
    if workers <= 1:
        return [run_tlqg(problem, config, options, initial_trajectory)
                for config in tqdm(configs, desc="seeds", disable=disable)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_tlqg, problem, config, options, initial_trajectory) for config in configs]
        return [future.result() for future in tqdm(futures, desc="seeds", disable=disable)]
