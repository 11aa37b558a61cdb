"""
공칭 궤적(p-traj / o-traj) 표현과 잡음 없는 전개
"""

from dataclasses import dataclass

import numpy as np

from run.utils.errors import EvaluationError, RolloutError


@dataclass(frozen=True)
class NominalTrajectory:
    """상태 x_{0:K} (K+1개)와 제어 u_{0:K-1} (K개)"""

    states: np.ndarray
    controls: np.ndarray

    def __post_init__(self):
        states = np.atleast_2d(np.asarray(self.states, dtype=float))
        controls = np.asarray(self.controls, dtype=float)
        if controls.ndim == 1:
            controls = controls.reshape(-1, 1) if controls.size else controls.reshape(0, 0)
        if states.shape[0] != controls.shape[0] + 1:
            raise ValueError(f"trajectory needs K+1 states for K controls, got {states.shape[0]} and {controls.shape[0]}")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "controls", controls)

    @property
    def horizon(self):
        return self.controls.shape[0]

    def positions(self, dims=2):
        return self.states[:, :dims]


def propagate_nominal(x0, controls, motion):
    """
    x^p_{t+1} = f(x^p_t, u^p_t, 0) 전개

    Args:
        x0: 초기 상태
        controls: (K, n_u) 제어열
        motion: MotionModel

    Returns:
        NominalTrajectory
    """
    controls = np.asarray(controls, dtype=float).reshape(-1, motion.control_dim)
    states = np.empty((controls.shape[0] + 1, motion.state_dim))
    states[0] = np.asarray(x0, dtype=float)
    for t, control in enumerate(controls):
        try:
            states[t + 1] = motion.evaluate(states[t], control)
        except EvaluationError as e:
            raise RolloutError(f"rollout diverged: {e}", time_index=t + 1) from e
    return NominalTrajectory(states, controls)
