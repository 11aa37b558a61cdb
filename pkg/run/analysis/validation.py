"""
오차 전파식 검증 스위트

- 상태/추정/제어/관측 오차의 비재귀식 vs 재귀 시뮬레이션 (절대 오차 <= 1e-10)
- 유한 차분 신뢰 Jacobian을 이용한 신뢰 오차식 (<= 1e-8)
- 선형화 비용 오차의 기댓값 0 검사 (Monte Carlo, |mean| <= 4 SE) 및 편향 주입 음성 대조군
- 추정 비용 trace 항등식 E[x_check^T W^T W x_check] = tr(W P W^T)
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np
from tqdm import tqdm

from run.analysis.error_propagation import (BeliefComposites, Composites, lemma1_estimation_error,
                                            lemma2_state_error, lemma3_control_error, lemma4_observation_error,
                                            lemma5_belief_error, recursive_belief_errors, recursive_errors)
from run.analysis.ltv_system import random_ltv_system, sample_realization
from run.config import (BELIEF_JACOBIAN_STEP, BELIEF_LEMMA_TOLERANCE, LEMMA_TOLERANCE, THEOREM_SIGMA_BOUND,
                        VALIDATION_HORIZON, VALIDATION_REALIZATIONS, VALIDATION_SAMPLES, VALIDATION_SYSTEMS)
from run.utils.numerics import finite_difference_jacobian, make_rng, regularized_inverse, symmetrize

logger = logging.getLogger(__name__)


def belief_vector(mean, covariance):
    """(평균; 공분산 상삼각 성분) 벡터"""
    covariance = np.atleast_2d(covariance)
    rows, cols = np.triu_indices(covariance.shape[0])
    return np.concatenate([np.atleast_1d(mean), covariance[rows, cols]])


def belief_from_vector(vector, state_dim):
    vector = np.asarray(vector, dtype=float)
    mean = vector[:state_dim]
    covariance = np.zeros((state_dim, state_dim))
    rows, cols = np.triu_indices(state_dim)
    covariance[rows, cols] = vector[state_dim:]
    covariance[cols, rows] = vector[state_dim:]
    return mean, covariance


def kf_belief_map(system, t):
    """
    시점 t의 KF 신뢰 갱신 tau_t(b, u, z_{t+1}) (벡터화된 신뢰)
    """
    A, B, G = system.A[t], system.B[t], system.G[t]
    H, M = system.H[t + 1], system.M[t + 1]
    noise = system.noise
    n = system.state_dim

    def tau(belief, control, observation):
        mean, covariance = belief_from_vector(belief, n)
        p_minus = symmetrize(A @ covariance @ A.T + G @ noise.sigma_omega @ G.T)
        s = symmetrize(H @ p_minus @ H.T + M @ noise.sigma_nu @ M.T)
        gain = p_minus @ H.T @ regularized_inverse(s, "innovation covariance", t + 1)
        predicted = A @ mean + B @ np.atleast_1d(control)
        new_mean = predicted + gain @ (np.atleast_1d(observation) - H @ predicted)
        new_covariance = symmetrize((np.eye(n) - gain @ H) @ p_minus)
        return belief_vector(new_mean, new_covariance)

    return tau


def belief_jacobians(system, t, step=BELIEF_JACOBIAN_STEP):
    """
    공칭점 (b = (0, P+_t), u = 0, z = 0)에서 tau_t의 중앙 차분 Jacobian

    Returns:
        (T^b_t, T^u_t, T^z_t)
    """
    tau = kf_belief_map(system, t)
    nominal = belief_vector(np.zeros(system.state_dim), system.posterior_covariances[t])
    control = np.zeros(system.control_dim)
    observation = np.zeros(system.obs_dim)
    t_b = finite_difference_jacobian(lambda b: tau(b, control, observation), nominal, step)
    t_u = finite_difference_jacobian(lambda u: tau(nominal, u, observation), control, step)
    t_z = finite_difference_jacobian(lambda z: tau(nominal, control, z), observation, step)
    return t_b, t_u, t_z


def all_belief_jacobians(system, step=BELIEF_JACOBIAN_STEP):
    return [belief_jacobians(system, t, step) for t in range(system.horizon)]


def cost_error_coefficients(system, belief_composites, cost_jacobians):
    """
    J_tilde = sum_{t<K} (C^b_t b_tilde_t + C^u_t u_tilde_t) + C^b_K b_tilde_K 를
    x0, w_s, v_s에 대한 선형 범함수 계수로 전개

    Returns:
        (c_x0, c_omega 리스트 (s = 0..K-1), c_nu 리스트 (s = 1..K))
    """
    c_b, c_u = cost_jacobians
    K = system.horizon
    comp = belief_composites.c
    coefficient = belief_composites.coefficient

    c_x0 = sum(np.atleast_2d(c_b[t]) @ coefficient("x0", t) for t in range(K + 1))
    c_x0 = c_x0 - sum(np.atleast_2d(c_u[t]) @ comp.l_x0(t) for t in range(1, K))
    c_omega, c_nu = [], []
    for s in range(K):
        total = sum(np.atleast_2d(c_b[t]) @ coefficient("omega", t, s) for t in range(s + 1, K + 1))
        total = total - sum(np.atleast_2d(c_u[t]) @ comp.l_omega(s, t) for t in range(s + 1, K))
        c_omega.append(np.atleast_2d(total))
    for j in range(1, K + 1):
        total = sum(np.atleast_2d(c_b[t]) @ coefficient("nu", t, j) for t in range(j, K + 1))
        total = total - sum(np.atleast_2d(c_u[t]) @ comp.l_nu(j - 1, t) for t in range(j, K))
        c_nu.append(np.atleast_2d(total))
    return c_x0, c_omega, c_nu


def theorem1_cost_error_check(system, cost_jacobians, samples=VALIDATION_SAMPLES, seed=0,
                              bias=None, belief_jacobians_list=None):
    """
    선형화 비용 오차 J_tilde의 Monte Carlo 평균과 표준 오차

    Args:
        system: LtvSystem
        cost_jacobians: (C^b_0..C^b_K, C^u_0..C^u_{K-1}) 행 벡터 리스트 쌍
        samples: 실현 개수 N
        seed: 난수 시드
        bias: x0 평균 (음성 대조군)
        belief_jacobians_list: 미리 계산한 (T^b, T^u, T^z) 리스트

    Returns:
        (mean, standard_error)
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    jacobians = belief_jacobians_list or all_belief_jacobians(system)
    beliefs = BeliefComposites(system, jacobians)
    c_x0, c_omega, c_nu = cost_error_coefficients(system, beliefs, cost_jacobians)
    realization = sample_realization(system, make_rng(seed), size=samples, bias=bias)

    values = (realization.x0 @ c_x0.T)[:, 0]
    for s, coefficient in enumerate(c_omega):
        values = values + (realization.omega_at(s) @ coefficient.T)[:, 0]
    for j, coefficient in enumerate(c_nu, start=1):
        values = values + (realization.nu_at(j) @ coefficient.T)[:, 0]
    mean = float(values.mean())
    standard_error = float(values.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    return mean, standard_error


def trace_identity_check(system, weight_factor, samples=VALIDATION_SAMPLES, seed=0, t=None):
    """
    E[x_check_t^T W^T W x_check_t]와 tr(W P+_t W^T) 비교

    Returns:
        (empirical mean, standard error, analytic value)
    """
    t = system.horizon if t is None else t
    realization = sample_realization(system, make_rng(seed), size=samples)
    checks = recursive_errors(system, realization).x_check[:, t, :]
    weighted = checks @ np.asarray(weight_factor).T
    values = np.einsum("ni,ni->n", weighted, weighted)
    analytic = float(np.trace(weight_factor @ system.posterior_covariances[t] @ np.asarray(weight_factor).T))
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(samples)), analytic


def lemma_residuals(system, realization, closed_system=None):
    """
    비재귀식 네 가지와 재귀 시뮬레이션의 최대 절대 오차

    Args:
        system: 재귀 시뮬레이션에 쓰는 LtvSystem
        realization: ErrorRealization (배치 가능)
        closed_system: 비재귀식에 쓰는 시스템 (기본: system)

    Returns:
        {'lemma1': .., 'lemma2': .., 'lemma3': .., 'lemma4': ..}
    """
    truth = recursive_errors(system, realization)
    closed = closed_system or system
    c = Composites(closed)
    K = system.horizon
    residuals = {'lemma1': 0.0, 'lemma2': 0.0, 'lemma3': 0.0, 'lemma4': 0.0}
    for t in range(-1, K):
        residuals['lemma1'] = max(residuals['lemma1'], float(np.max(np.abs(
            lemma1_estimation_error(closed, realization, t, c) - truth.x_check[..., t + 1, :]))))
        residuals['lemma2'] = max(residuals['lemma2'], float(np.max(np.abs(
            lemma2_state_error(closed, realization, t, c) - truth.x_tilde[..., t + 1, :]))))
        if t <= K - 2:
            residuals['lemma3'] = max(residuals['lemma3'], float(np.max(np.abs(
                lemma3_control_error(closed, realization, t, c) - truth.u_tilde[..., t + 1, :]))))
        if t >= 0:
            residuals['lemma4'] = max(residuals['lemma4'], float(np.max(np.abs(
                lemma4_observation_error(closed, realization, t, c) - truth.z_tilde[..., t + 1, :]))))
    return residuals


def belief_residual(system, realization, jacobians, closed_system=None):
    """신뢰 오차 비재귀식과 선형화 재귀의 최대 절대 오차"""
    expected = recursive_belief_errors(system, realization, jacobians)
    closed = closed_system or system
    beliefs = BeliefComposites(closed, jacobians)
    worst = 0.0
    for t in range(system.horizon + 1):
        value = lemma5_belief_error(closed, realization, t, beliefs)
        worst = max(worst, float(np.max(np.abs(value - expected[..., t, :]))))
    return worst


def _faulty(system):
    # 음성 대조군: 비재귀식에만 잘못된 LQR 이득 사용
    return system.with_lqr_gains([1.1 * gain + 0.1 for gain in system.lqr_gains])


@dataclass
class ValidationReport:
    lemma_residuals: Dict[str, float] = field(default_factory=dict)
    lemma5_residual: float = 0.0
    theorem1_mean: float = 0.0
    theorem1_se: float = 0.0
    negative_control_mean: float = 0.0
    negative_control_se: float = 0.0
    trace_identity: tuple = (0.0, 0.0, 0.0)
    fault_injected: bool = False
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures

    def to_dict(self):
        return {
            'lemma_residuals': self.lemma_residuals,
            'lemma5_residual': self.lemma5_residual,
            'theorem1': {'mean': self.theorem1_mean, 'standard_error': self.theorem1_se},
            'negative_control': {'mean': self.negative_control_mean, 'standard_error': self.negative_control_se},
            'trace_identity': dict(zip(('mean', 'standard_error', 'analytic'), self.trace_identity)),
            'fault_injected': self.fault_injected,
            'failures': self.failures,
            'passed': self.passed,
        }


def run_validation_suite(seed=0, systems=VALIDATION_SYSTEMS, realizations=VALIDATION_REALIZATIONS,
                         samples=VALIDATION_SAMPLES, inject_fault=False, horizon=VALIDATION_HORIZON):
    """
    전체 검증 스위트 실행

    Args:
        seed: 난수 시드
        systems: 무작위 LTV 시스템 수 (n_x=2, n_u=1, n_z=2)
        realizations: 시스템당 실현 수
        samples: 비용 오차 / trace 항등식 Monte Carlo 샘플 수
        inject_fault: True이면 비재귀식에 잘못된 LQR 이득을 주입
        horizon: 시스템 horizon K

    Returns:
        ValidationReport
    """
    rng = make_rng(seed)
    report = ValidationReport(fault_injected=inject_fault)
    worst = {'lemma1': 0.0, 'lemma2': 0.0, 'lemma3': 0.0, 'lemma4': 0.0}

    logger.info("========== Error propagation closed forms ==========")
    disable = not logger.isEnabledFor(logging.INFO)
    for _ in tqdm(range(systems), desc="systems", disable=disable):
        system = random_ltv_system(rng, 2, 1, 2, horizon)
        realization = sample_realization(system, rng, size=realizations)
        residuals = lemma_residuals(system, realization, _faulty(system) if inject_fault else None)
        for key, value in residuals.items():
            worst[key] = max(worst[key], value)
    report.lemma_residuals = worst
    for key, value in worst.items():
        logger.info(f"{key}: max residual {value:.3e}")
        if not value <= LEMMA_TOLERANCE:
            report.failures.append(f"{key} residual {value:.3e} > {LEMMA_TOLERANCE:g}")

    logger.info("========== Belief error propagation ==========")
    scalar = random_ltv_system(rng, 1, 1, 1, 3)
    jacobians = all_belief_jacobians(scalar)
    realization = sample_realization(scalar, rng, size=realizations)
    report.lemma5_residual = belief_residual(scalar, realization, jacobians,
                                             _faulty(scalar) if inject_fault else None)
    logger.info(f"lemma5: max residual {report.lemma5_residual:.3e}")
    if not report.lemma5_residual <= BELIEF_LEMMA_TOLERANCE:
        report.failures.append(f"lemma5 residual {report.lemma5_residual:.3e} > {BELIEF_LEMMA_TOLERANCE:g}")

    logger.info("========== Linearized cost error ==========")
    belief_dim = jacobians[0][0].shape[0]
    cost_jacobians = ([rng.normal(size=(1, belief_dim)) for _ in range(scalar.horizon + 1)],
                      [rng.normal(size=(1, scalar.control_dim)) for _ in range(scalar.horizon)])
    report.theorem1_mean, report.theorem1_se = theorem1_cost_error_check(
        scalar, cost_jacobians, samples, seed, belief_jacobians_list=jacobians)
    logger.info(f"theorem1: mean={report.theorem1_mean:.4e}, SE={report.theorem1_se:.4e}")
    if abs(report.theorem1_mean) > THEOREM_SIGMA_BOUND * report.theorem1_se:
        report.failures.append(f"theorem1 mean {report.theorem1_mean:.3e} exceeds "
                               f"{THEOREM_SIGMA_BOUND:g} SE ({report.theorem1_se:.3e})")

    c_x0, _, _ = cost_error_coefficients(scalar, BeliefComposites(scalar, jacobians), cost_jacobians)
    direction = c_x0.ravel()
    bias = direction / np.linalg.norm(direction) if np.any(direction) else np.ones(scalar.state_dim)
    report.negative_control_mean, report.negative_control_se = theorem1_cost_error_check(
        scalar, cost_jacobians, samples, seed + 1, bias=bias, belief_jacobians_list=jacobians)
    logger.info(f"negative control: mean={report.negative_control_mean:.4e}, SE={report.negative_control_se:.4e}")
    if abs(report.negative_control_mean) <= THEOREM_SIGMA_BOUND * report.negative_control_se:
        report.failures.append("negative control (biased x0) was not detected")

    logger.info("========== Estimation cost trace identity ==========")
    planar = random_ltv_system(rng, 2, 1, 2, horizon)
    weight_factor = np.eye(2) + 0.3 * rng.normal(size=(2, 2))
    report.trace_identity = trace_identity_check(planar, weight_factor, samples, seed)
    empirical, standard_error, analytic = report.trace_identity
    logger.info(f"trace identity: empirical={empirical:.5g} +- {standard_error:.2g}, analytic={analytic:.5g}")
    if abs(empirical - analytic) > 3.0 * standard_error:
        report.failures.append(f"trace identity off by {abs(empirical - analytic):.3e} (> 3 SE)")

    return report

