"""
오차 전파 검증용 선형 시변(LTV) LQG 시스템과 오차 실현값

인덱스 규약:
    A, B, G: t = 0..K-1
    H, M, kalman_gains, U: t = 0..K (index 0은 사용하지 않으며 0 행렬)
    lqr_gains L: t = 0..K-1 (x_check_0 = x_tilde_0 이므로 L_0 항은 상쇄됨)
    nu는 K행으로 저장하며 nu_s = nu[s - 1] (s = 1..K)
"""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from run.belief.gaussian_belief import riccati_step
from run.control.lqr import lqr_backward
from run.models.model_types import NoiseSpec
from run.utils.errors import ConfigurationError
from run.utils.numerics import sample_gaussian

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LtvSystem:
    A: List[np.ndarray]
    B: List[np.ndarray]
    G: List[np.ndarray]
    H: List[np.ndarray]
    M: List[np.ndarray]
    noise: NoiseSpec
    lqr_gains: List[np.ndarray]
    kalman_gains: List[np.ndarray]
    p0: np.ndarray
    posterior_covariances: List[np.ndarray]

    def __post_init__(self):
        K = len(self.A)
        for name, expected in (("B", K), ("G", K), ("lqr_gains", K), ("H", K + 1), ("M", K + 1),
                               ("kalman_gains", K + 1), ("posterior_covariances", K + 1)):
            if len(getattr(self, name)) != expected:
                raise ConfigurationError(f"LtvSystem.{name} needs {expected} entries, got {len(getattr(self, name))}")

    @property
    def horizon(self):
        return len(self.A)

    @property
    def state_dim(self):
        return self.A[0].shape[0]

    @property
    def control_dim(self):
        return self.B[0].shape[1]

    @property
    def obs_dim(self):
        return self.H[1].shape[0]

    def U(self, t):
        """U_t = I - K_t H_t (t >= 1)"""
        return np.eye(self.state_dim) - self.kalman_gains[t] @ self.H[t]

    def with_lqr_gains(self, gains):
        return LtvSystem(self.A, self.B, self.G, self.H, self.M, self.noise, list(gains),
                         self.kalman_gains, self.p0, self.posterior_covariances)


@dataclass(frozen=True)
class ErrorRealization:
    """
    x0: 초기 상태 오차 (..., n_x)
    omega: 공정 잡음 w_{0:K-1} (..., K, n_w)
    nu: 관측 잡음 v_{1:K} (..., K, n_v), v_s = nu[..., s-1, :]

    앞쪽 배치 차원을 가질 수 있다.
    """

    x0: np.ndarray
    omega: np.ndarray
    nu: np.ndarray

    def nu_at(self, s):
        return self.nu[..., s - 1, :]

    def omega_at(self, s):
        return self.omega[..., s, :]


def build_ltv_system(A, B, G, H, M, noise, p0, w_x=None, w_u=None):
    """
    주어진 행렬에서 LQR 이득과 Kalman 이득을 유도해 LtvSystem 구성

    Args:
        A, B, G: 길이 K 리스트
        H, M: 길이 K 리스트 (t = 1..K)
        noise: NoiseSpec
        p0: 초기 공분산
        w_x, w_u: LQR 가중치 (기본: 단위 행렬)
    """
    K = len(A)
    n = A[0].shape[0]
    m = B[0].shape[1]
    w_x = w_x or [np.eye(n)] * K
    w_u = w_u or [np.eye(m)] * K
    _, lqr_gains = lqr_backward(A, B, w_x, w_u)

    H_full = [np.zeros_like(H[0])] + list(H)
    M_full = [np.zeros_like(M[0])] + list(M)
    kalman = [np.zeros((n, H[0].shape[0]))]
    covariances = [np.asarray(p0, dtype=float)]
    for t in range(K):
        step = riccati_step(covariances[-1], A[t], G[t], H_full[t + 1], M_full[t + 1], noise, time_index=t + 1)
        kalman.append(step.k)
        covariances.append(step.p_plus)
    return LtvSystem(list(A), list(B), list(G), H_full, M_full, noise, lqr_gains, kalman,
                     np.asarray(p0, dtype=float), covariances)


def random_ltv_system(rng, state_dim=2, control_dim=1, obs_dim=2, horizon=5):
    """
    무작위 LTV 시스템 (잡음 차원 = 상태/관측 차원)
    """
    def matrix(rows, cols, scale=0.5):
        return rng.normal(scale=scale, size=(rows, cols))

    A = [0.8 * np.eye(state_dim) + matrix(state_dim, state_dim, 0.3) for _ in range(horizon)]
    B = [matrix(state_dim, control_dim) for _ in range(horizon)]
    G = [np.eye(state_dim) + matrix(state_dim, state_dim, 0.2) for _ in range(horizon)]
    H = [np.eye(obs_dim, state_dim) + matrix(obs_dim, state_dim, 0.3) for _ in range(horizon)]
    M = [np.eye(obs_dim) + matrix(obs_dim, obs_dim, 0.1) for _ in range(horizon)]
    root_w = matrix(state_dim, state_dim, 0.3)
    root_v = matrix(obs_dim, obs_dim, 0.3)
    noise = NoiseSpec(0.1 * np.eye(state_dim) + root_w @ root_w.T, 0.1 * np.eye(obs_dim) + root_v @ root_v.T)
    root_p = matrix(state_dim, state_dim, 0.3)
    p0 = 0.2 * np.eye(state_dim) + root_p @ root_p.T
    return build_ltv_system(A, B, G, H, M, noise, 0.5 * (p0 + p0.T))


def sample_realization(system, rng, size=None, bias=None):
    """
    x0 ~ N(bias, P0), w_t ~ N(0, S_w), v_t ~ N(0, S_v)

    Args:
        system: LtvSystem
        rng: numpy Generator
        size: 배치 크기 (None이면 단일 실현)
        bias: x0 평균 (음성 대조군용, 기본 0)
    """
    K = system.horizon
    n = system.state_dim
    mean = np.zeros(n) if bias is None else np.asarray(bias, dtype=float)
    n_w = system.noise.sigma_omega.shape[0]
    n_v = system.noise.sigma_nu.shape[0]
    x0 = sample_gaussian(mean, system.p0, rng, size=size)
    count = 1 if size is None else size
    omega = sample_gaussian(np.zeros(n_w), system.noise.sigma_omega, rng, size=count * K)
    nu = sample_gaussian(np.zeros(n_v), system.noise.sigma_nu, rng, size=count * K)
    if size is None:
        return ErrorRealization(x0, omega.reshape(K, n_w), nu.reshape(K, n_v))
    return ErrorRealization(x0, omega.reshape(size, K, n_w), nu.reshape(size, K, n_v))
