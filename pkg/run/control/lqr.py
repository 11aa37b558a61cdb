"""
o-traj 추종 LQR 제어기와 LQG 정책 구성

W^u_{t+1}(= w_u[t])이 u_t를 가중하고, 종단 조건은 P^f_K = W^x_K 이다.
"""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np
import scipy.linalg

from run.belief.gaussian_belief import forward_riccati_step, update_gain
from run.config import CONDITION_LIMIT
from run.utils.errors import NumericalError
from run.utils.numerics import symmetrize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LqgPolicy:
    """
    nominal: 추종할 o-traj
    gains: L^o_t (t = 0..K-1)
    kalman_gains: 예측형 이득 K^o_t (t = 0..K-1)
    value_matrices: P^f_t (t = 0..K)
    covariances: 전방 Riccati 공분산 P^o_t (t = 0..K)
    update_gains: 평균 갱신 이득 (index t는 z_{t+1}에 적용, t = 0..K-1)
    """

    nominal: object
    gains: List[np.ndarray]
    kalman_gains: List[np.ndarray]
    value_matrices: List[np.ndarray]
    covariances: List[np.ndarray]
    update_gains: List[np.ndarray]

    @property
    def horizon(self):
        return len(self.gains)


def lqr_backward(A_seq, B_seq, w_x, w_u):
    """
    Jacobian 열에 대한 역방향 Riccati

    Args:
        A_seq, B_seq: t = 0..K-1의 A_t, B_t
        w_x: K개의 W^x (w_x[t-1]이 P^f_t에 더해짐, t = 0에는 w_x[0])
        w_u: K개의 W^u (w_u[t]가 u_t를 가중)

    Returns:
        (value_matrices K+1개, gains K개)
    """
    horizon = len(A_seq)
    values = [None] * (horizon + 1)
    gains = [None] * horizon
    values[horizon] = symmetrize(w_x[horizon - 1])
    for t in range(horizon - 1, -1, -1):
        A, B, P = A_seq[t], B_seq[t], values[t + 1]
        hessian = symmetrize(w_u[t] + B.T @ P @ B)
        condition = np.linalg.cond(hessian)
        if not np.isfinite(condition) or condition > CONDITION_LIMIT:
            raise NumericalError("control Hessian W^u + B^T P B is singular", condition=condition, time_index=t)
        gain = scipy.linalg.solve(hessian, B.T @ P @ A, assume_a="sym")
        gains[t] = gain
        values[t] = symmetrize(A.T @ P @ A - A.T @ P @ B @ gain + w_x[max(t - 1, 0)])
    return values, gains


def backward_riccati(traj, motion, weights):
    """
    o-traj (x^o_t, u^o_t)에서 선형화한 LQR 역방향 재귀

    Returns:
        (value_matrices, gains)
    """
    A_seq, B_seq = [], []
    for state, control in zip(traj.states[:-1], traj.controls):
        A, B, _ = motion.jacobians(state, control)
        A_seq.append(A)
        B_seq.append(B)
    return lqr_backward(A_seq, B_seq, weights.w_x, weights.w_u)


def forward_covariances(traj, motion, obs, noise, p0):
    """
    o-traj를 따라 전방 Riccati (예측형)

    Returns:
        (covariances K+1개, kalman_gains K개, update_gains K개)
    """
    covariances = [symmetrize(np.atleast_2d(p0))]
    kalman_gains, update_gains = [], []
    for t, control in enumerate(traj.controls):
        A, _, G = motion.jacobians(traj.states[t], control)
        H, M = obs.jacobians(traj.states[t])
        gain, p_next = forward_riccati_step(covariances[-1], A, G, H, M, noise, time_index=t)
        H_next, M_next = obs.jacobians(traj.states[t + 1])
        kalman_gains.append(gain)
        update_gains.append(update_gain(p_next, H_next, M_next, noise, time_index=t + 1))
        covariances.append(p_next)
    return covariances, kalman_gains, update_gains


def build_policy(traj, motion, obs, noise, weights, p0):
    """
    o-traj에 대한 LQG 정책 (LQR 이득 + 필터 이득) 구성

    이득은 궤적과 가중치에만 의존하고 관측/신뢰에는 의존하지 않는다.
    """
    values, gains = backward_riccati(traj, motion, weights)
    covariances, kalman_gains, update_gains = forward_covariances(traj, motion, obs, noise, p0)
    logger.debug(f"policy built: K={traj.horizon}, |L_0|={np.linalg.norm(gains[0]) if gains else 0.0:.4g}")
    return LqgPolicy(nominal=traj, gains=gains, kalman_gains=kalman_gains, value_matrices=values,
                     covariances=covariances, update_gains=update_gains)


def control_action(policy, t, estimate):
    """
    u_t = u^o_t - L^o_t (x_hat_t - x^o_t)
    """
    if not 0 <= t < policy.horizon:
        raise IndexError(f"time index {t} outside policy horizon {policy.horizon}")
    deviation = np.asarray(estimate, dtype=float) - policy.nominal.states[t]
    return policy.nominal.controls[t] - policy.gains[t] @ deviation
