"""
o-traj 주변에서 선형화한 Kalman 필터 평균 갱신
"""

from dataclasses import dataclass

import numpy as np

from run.utils.numerics import wrap_angle


@dataclass(frozen=True)
class LinearizationPoint:
    """
    한 시점의 선형화 데이터

    f_offset = f(x^o_t, u^o_t, 0) - A x^o_t - B u^o_t
    h_offset = h(x^o_{t+1}, 0) - H x^o_{t+1}
    """

    x_nom: np.ndarray
    u_nom: np.ndarray
    A: np.ndarray
    B: np.ndarray
    H: np.ndarray
    f_offset: np.ndarray
    h_offset: np.ndarray

    @classmethod
    def from_models(cls, motion, obs, x_nom, u_nom, x_next_nom):
        A, B, _ = motion.jacobians(x_nom, u_nom)
        H, _ = obs.jacobians(x_next_nom)
        f_offset = motion.evaluate(x_nom, u_nom) - A @ x_nom - B @ u_nom
        h_offset = obs.evaluate(x_next_nom) - H @ x_next_nom
        return cls(np.asarray(x_nom, dtype=float), np.asarray(u_nom, dtype=float),
                   A, B, H, f_offset, h_offset)


def kf_mean_update(belief, control, observation, lin, gain, angle_indices=()):
    """
    KF 평균 갱신
    x_{t+1} = (I - K H) f^o - K h^o + A x_t + B u_t + K (z_{t+1} - H (A x_t + B u_t))

    Args:
        belief: GaussianBelief 또는 평균 벡터
        control: 적용한 제어 u_t
        observation: 관측 z_{t+1}
        lin: LinearizationPoint
        gain: Kalman 이득 K_{t+1}
        angle_indices: 잔차를 (-pi, pi]로 래핑할 관측 성분

    Returns:
        갱신된 평균 벡터
    """
    mean = np.asarray(getattr(belief, "mean", belief), dtype=float)
    predicted = lin.f_offset + lin.A @ mean + lin.B @ np.asarray(control, dtype=float)
    innovation = np.asarray(observation, dtype=float) - lin.h_offset - lin.H @ predicted
    if angle_indices:
        index = list(angle_indices)
        innovation[index] = wrap_angle(innovation[index])
    return predicted + gain @ innovation
