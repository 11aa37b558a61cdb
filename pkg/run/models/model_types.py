"""
운동/관측 모델과 잡음 사양의 데이터 타입
"""

from dataclasses import dataclass, field
from typing import Callable, Tuple

import numpy as np

from run.utils.errors import ConfigurationError
from run.utils.numerics import require_finite


@dataclass(frozen=True)
class MotionModel:
    """
    x_{t+1} = f(x_t, u_t, w_t) 형태의 운동 모델

    jacobian_fn(x, u)는 w = 0에서의 (A, B, G)를 반환한다.
    """

    name: str
    state_dim: int
    control_dim: int
    noise_dim: int
    fn: Callable = field(repr=False)
    jacobian_fn: Callable = field(repr=False)
    position_dims: int = 2

    def evaluate(self, x, u, w=None):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        w = np.zeros(self.noise_dim) if w is None else np.asarray(w, dtype=float)
        return require_finite(self.fn(x, u, w), f"{self.name} state")

    def jacobians(self, x, u):
        return self.jacobian_fn(np.asarray(x, dtype=float), np.asarray(u, dtype=float))


@dataclass(frozen=True)
class ObservationModel:
    """
    z_t = h(x_t, v_t) 형태의 관측 모델

    jacobian_fn(x)는 v = 0에서의 (H, M)을 반환한다.
    angle_indices는 각도(bearing) 성분의 인덱스로, 잔차를 (-pi, pi]로 래핑할 때 사용한다.
    """

    name: str
    obs_dim: int
    noise_dim: int
    fn: Callable = field(repr=False)
    jacobian_fn: Callable = field(repr=False)
    angle_indices: Tuple[int, ...] = ()

    def evaluate(self, x, v=None):
        x = np.asarray(x, dtype=float)
        v = np.zeros(self.noise_dim) if v is None else np.asarray(v, dtype=float)
        return require_finite(self.fn(x, v), f"{self.name} observation")

    def jacobians(self, x):
        return self.jacobian_fn(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class NoiseSpec:
    """공정 잡음 공분산 sigma_omega와 관측 잡음 공분산 sigma_nu"""

    sigma_omega: np.ndarray
    sigma_nu: np.ndarray

    def __post_init__(self):
        for label in ("sigma_omega", "sigma_nu"):
            matrix = np.atleast_2d(np.asarray(getattr(self, label), dtype=float))
            if matrix.shape[0] != matrix.shape[1]:
                raise ConfigurationError(f"{label} must be square, got shape {matrix.shape}")
            if not np.allclose(matrix, matrix.T, atol=1e-12):
                raise ConfigurationError(f"{label} must be symmetric")
            if matrix.size and np.linalg.eigvalsh(matrix).min() < -1e-12:
                raise ConfigurationError(f"{label} must be positive semi-definite")
            object.__setattr__(self, label, matrix)

    @classmethod
    def isotropic(cls, omega_var, nu_var, noise_dim, obs_noise_dim):
        return cls(omega_var * np.eye(noise_dim), nu_var * np.eye(obs_noise_dim))


@dataclass(frozen=True)
class LandmarkMap:
    """평면 랜드마크 위치 목록 (m)"""

    landmarks: Tuple[Tuple[float, float], ...] = ()

    @property
    def positions(self):
        return np.asarray(self.landmarks, dtype=float).reshape(-1, 2)

    def __len__(self):
        return len(self.landmarks)
