"""
운동 모델: KUKA youBot 베이스(메카넘 휠 4개)와 일반 선형 모델
"""

import logging

import numpy as np

from run.config import YOUBOT_DT, YOUBOT_HALF_LENGTH, YOUBOT_HALF_WIDTH, YOUBOT_WHEEL_RADIUS
from run.models.model_types import MotionModel
from run.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)


def mecanum_kinematics(wheel_radius, half_length, half_width):
    """
    바퀴 각속도 (w1..w4) -> 베이스 속도 (vx, vy, omega) 변환 행렬

    Args:
        wheel_radius: 바퀴 반지름 r
        half_length: 베이스 반길이 l1
        half_width: 베이스 반폭 l2

    Returns:
        3x4 행렬 (전후좌우 배치: 앞왼쪽, 앞오른쪽, 뒤왼쪽, 뒤오른쪽)
    """
    k = 1.0 / (half_length + half_width)
    return (wheel_radius / 4.0) * np.array([
        [1.0, 1.0, 1.0, 1.0],
        [-1.0, 1.0, 1.0, -1.0],
        [-k, k, -k, k],
    ])


def youbot_motion(wheel_radius=YOUBOT_WHEEL_RADIUS, half_length=YOUBOT_HALF_LENGTH,
                  half_width=YOUBOT_HALF_WIDTH, dt=YOUBOT_DT, noise_gain=None):
    """
    youBot 베이스 운동 모델 x_{t+1} = x_t + B u_t dt + G w_t sqrt(dt)

    Args:
        wheel_radius, half_length, half_width: 휠 기하 (m, 양수)
        dt: 이산화 주기 (s, 양수)
        noise_gain: 3x3 잡음 이득 (기본: 단위 행렬)

    Returns:
        상태 (x, y, theta), 제어 4개 바퀴 속도의 MotionModel
    """
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if min(wheel_radius, half_length, half_width) <= 0:
        raise ConfigurationError("youBot geometry parameters must be positive")

    control_matrix = mecanum_kinematics(wheel_radius, half_length, half_width) * dt
    gain = np.eye(3) if noise_gain is None else np.asarray(noise_gain, dtype=float)
    noise_matrix = gain * np.sqrt(dt)
    identity = np.eye(3)

    def fn(x, u, w):
        return x + control_matrix @ u + noise_matrix @ w

    def jacobian_fn(x, u):
        return identity.copy(), control_matrix.copy(), noise_matrix.copy()

    logger.debug(f"youBot model built: r={wheel_radius}, l1={half_length}, l2={half_width}, dt={dt}")
    return MotionModel(name="youbot", state_dim=3, control_dim=4, noise_dim=noise_matrix.shape[1],
                       fn=fn, jacobian_fn=jacobian_fn, position_dims=2)


def linear_motion(A, B, G, position_dims=None):
    """
    선형 시불변 모델 x_{t+1} = A x + B u + G w
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    G = np.atleast_2d(np.asarray(G, dtype=float))
    if A.shape[0] != A.shape[1] or B.shape[0] != A.shape[0] or G.shape[0] != A.shape[0]:
        raise ConfigurationError(f"inconsistent linear model shapes A{A.shape} B{B.shape} G{G.shape}")

    def fn(x, u, w):
        return A @ x + B @ u + G @ w

    def jacobian_fn(x, u):
        return A.copy(), B.copy(), G.copy()

    n = A.shape[0]
    return MotionModel(name="linear", state_dim=n, control_dim=B.shape[1], noise_dim=G.shape[1],
                       fn=fn, jacobian_fn=jacobian_fn,
                       position_dims=min(n, 2) if position_dims is None else position_dims)
