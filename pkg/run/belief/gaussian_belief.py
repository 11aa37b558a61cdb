"""
가우시안 신뢰(belief) 표현과 공분산 Riccati 재귀

계획 단계에서는 갱신형(update form) Riccati 재귀로 공칭 궤적을 따라 P+를 전개하고,
실행 단계에서는 예측형(predictor form) 전방 Riccati 재귀를 사용한다.
"""

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from run.utils.errors import NumericalError
from run.utils.numerics import pivoted_cholesky, regularized_inverse, symmetrize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaussianBelief:
    """상태 추정의 평균과 공분산 N(mean, covariance)"""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        covariance = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if covariance.shape != (mean.size, mean.size):
            raise ValueError(f"covariance shape {covariance.shape} does not match mean size {mean.size}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", symmetrize(covariance))

    @property
    def dim(self):
        return self.mean.size

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.covariance).min())


@dataclass(frozen=True)
class RiccatiStep:
    """한 시점의 Riccati 갱신 결과 (P-, S, K, P+)"""

    p_minus: np.ndarray
    s: np.ndarray
    k: np.ndarray
    p_plus: np.ndarray


@dataclass(frozen=True)
class CostWeights:
    """
    시점 t = 1..K의 가중치 W^x_t, W^u_t 와 W^x_t = W_t^T W_t 인 Cholesky 인자

    w_x[t-1]은 P+_t를, w_u[t-1]은 u_{t-1}을 가중한다.
    """

    w_x: List[np.ndarray]
    w_u: List[np.ndarray]
    w_chol: List[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        w_x = [symmetrize(np.atleast_2d(w)) for w in self.w_x]
        w_u = [symmetrize(np.atleast_2d(w)) for w in self.w_u]
        if len(w_x) != len(w_u):
            raise ValueError(f"weight lists differ in length: {len(w_x)} vs {len(w_u)}")
        object.__setattr__(self, "w_x", w_x)
        object.__setattr__(self, "w_u", w_u)
        if self.w_chol is None:
            object.__setattr__(self, "w_chol", [pivoted_cholesky(w) for w in w_x])

    @property
    def horizon(self):
        return len(self.w_x)

    @classmethod
    def uniform(cls, w_x, w_u, horizon, state_dim, control_dim):
        """
        모든 시점에 같은 가중치 사용 (스칼라이면 스칼라 * I)
        """
        def as_matrix(value, dim):
            value = np.asarray(value, dtype=float)
            return value * np.eye(dim) if value.ndim == 0 else value

        wx = as_matrix(w_x, state_dim)
        wu = as_matrix(w_u, control_dim)
        return cls([wx.copy() for _ in range(horizon)], [wu.copy() for _ in range(horizon)])


def riccati_step(prev, A, G, H, M, noise, time_index=None):
    """
    계획 단계 Riccati 갱신 한 스텝

    Args:
        prev: 이전 사후 공분산 P+_{t-1}
        A, G: 공칭점에서의 운동 모델 Jacobian
        H, M: 공칭점에서의 관측 모델 Jacobian
        noise: NoiseSpec
        time_index: 오류 보고용 시간 인덱스

    Returns:
        RiccatiStep (P- = A P A^T + G S_w G^T, S = H P- H^T + M S_v M^T,
                     K = P- H^T S^-1, P+ = (I - K H) P-)
    """
    p_minus = symmetrize(A @ prev @ A.T + G @ noise.sigma_omega @ G.T)
    s = symmetrize(H @ p_minus @ H.T + M @ noise.sigma_nu @ M.T)
    if not np.any(H) or not np.any(s):
        k = np.zeros((p_minus.shape[0], H.shape[0]))
    else:
        k = p_minus @ H.T @ regularized_inverse(s, "innovation covariance", time_index)
    p_plus = symmetrize((np.eye(p_minus.shape[0]) - k @ H) @ p_minus)
    return RiccatiStep(p_minus=p_minus, s=s, k=k, p_plus=p_plus)


def propagate_nominal_covariance(traj, motion, obs, noise, p0):
    """
    공칭 궤적을 따라 riccati_step을 연쇄 적용

    Args:
        traj: states(K+1), controls(K)를 가진 NominalTrajectory
        motion, obs: 운동/관측 모델
        noise: NoiseSpec
        p0: 초기 공분산 Sigma_x0

    Returns:
        길이 K의 RiccatiStep 리스트 (관측값과 무관, 궤적만의 함수)
    """
    steps = []
    covariance = symmetrize(np.atleast_2d(p0))
    for t, control in enumerate(traj.controls):
        A, _, G = motion.jacobians(traj.states[t], control)
        H, M = obs.jacobians(traj.states[t + 1])
        try:
            step = riccati_step(covariance, A, G, H, M, noise, time_index=t + 1)
        except NumericalError as e:
            if e.time_index is None:
                e.time_index = t + 1
            raise
        steps.append(step)
        covariance = step.p_plus
    return steps


def update_gain(p_prior, H, M, noise, time_index=None):
    """갱신형 Kalman 이득 P H^T (H P H^T + M S_v M^T)^-1"""
    s = symmetrize(H @ p_prior @ H.T + M @ noise.sigma_nu @ M.T)
    if not np.any(H) or not np.any(s):
        return np.zeros((p_prior.shape[0], H.shape[0]))
    return p_prior @ H.T @ regularized_inverse(s, "innovation covariance", time_index)


def forward_riccati_step(p, A, G, H, M, noise, time_index=None):
    """
    실행 단계 전방 Riccati (예측형)

    Args:
        p: 현재 공분산 P^o_t
        A, G, H, M: o-traj에서의 Jacobian
        noise: NoiseSpec

    Returns:
        (K^o = A P H^T (H P H^T + M S_v M^T)^-1,
         P_next = A (P - P H^T (...)^-1 H P + G S_w G^T) A^T)
    """
    p = symmetrize(p)
    s = symmetrize(H @ p @ H.T + M @ noise.sigma_nu @ M.T)
    if not np.any(H) or not np.any(s):
        inner = p
        gain = np.zeros((A.shape[0], H.shape[0]))
    else:
        s_inv = regularized_inverse(s, "innovation covariance", time_index)
        inner = p - p @ H.T @ s_inv @ H @ p
        gain = A @ p @ H.T @ s_inv
    p_next = symmetrize(A @ (inner + G @ noise.sigma_omega @ G.T) @ A.T)
    return gain, p_next
