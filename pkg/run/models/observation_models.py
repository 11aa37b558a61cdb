"""
관측 모델: 랜드마크 기반 range/bearing 센서와 light-dark 센서
"""

import logging

import numpy as np

from run.config import LIGHT_DARK_HYPERBOLIC, LIGHT_DARK_QUADRATIC
from run.models.model_types import ObservationModel
from run.utils.errors import ConfigurationError, EvaluationError, SingularPointError
from run.utils.numerics import wrap_angle

logger = logging.getLogger(__name__)

LANDMARK_KINDS = ("range_bearing", "bearing_only", "range_only", "range_squared")
LIGHT_DARK_KINDS = ("light_dark_quadratic", "light_dark_hyperbolic")
OBSERVATION_KINDS = LANDMARK_KINDS + LIGHT_DARK_KINDS

# 랜드마크별 관측 성분
_COMPONENTS = {
    "range_bearing": ("range", "bearing"),
    "bearing_only": ("bearing",),
    "range_only": ("range",),
    "range_squared": ("range_squared",),
}


def _landmark_geometry(x, landmark, needs_direction):
    dx = landmark[0] - x[0]
    dy = landmark[1] - x[1]
    q = dx * dx + dy * dy
    if needs_direction and q == 0.0:
        raise SingularPointError(f"state coincides with landmark {tuple(landmark)} (zero range)")
    return dx, dy, q


def _landmark_model(kind, landmarks, state_dim):
    components = _COMPONENTS[kind]
    needs_heading = "bearing" in components
    if needs_heading and state_dim < 3:
        raise ConfigurationError(f"{kind} requires a heading state component")
    per_landmark = len(components)
    obs_dim = per_landmark * len(landmarks)
    angle_indices = tuple(i * per_landmark + j for i in range(len(landmarks))
                          for j, name in enumerate(components) if name == "bearing")

    def fn(x, v):
        z = np.empty(obs_dim)
        k = 0
        for landmark in landmarks:
            dx, dy, q = _landmark_geometry(x, landmark, "bearing" in components)
            for name in components:
                if name == "range":
                    z[k] = np.sqrt(q)
                elif name == "bearing":
                    z[k] = np.arctan2(dy, dx) - x[2]
                else:
                    z[k] = q
                k += 1
        z = z + v
        if angle_indices:
            z[list(angle_indices)] = wrap_angle(z[list(angle_indices)])
        return z

    def jacobian_fn(x):
        H = np.zeros((obs_dim, state_dim))
        k = 0
        for landmark in landmarks:
            dx, dy, q = _landmark_geometry(x, landmark, True if kind != "range_squared" else False)
            for name in components:
                if name == "range":
                    r = np.sqrt(q)
                    H[k, 0] = -dx / r
                    H[k, 1] = -dy / r
                elif name == "bearing":
                    H[k, 0] = dy / q
                    H[k, 1] = -dx / q
                    H[k, 2] = -1.0
                else:
                    H[k, 0] = -2.0 * dx
                    H[k, 1] = -2.0 * dy
                k += 1
        return H, np.eye(obs_dim)

    return ObservationModel(name=kind, obs_dim=obs_dim, noise_dim=obs_dim, fn=fn,
                            jacobian_fn=jacobian_fn, angle_indices=angle_indices)


def _light_dark_model(kind, params, state_dim, position_dims):
    if kind == "light_dark_quadratic":
        constants = {**LIGHT_DARK_QUADRATIC, **params}
        a, b, light = constants["a"], constants["b"], constants["light"]

        def noise_scale(x):
            return a * (x[0] - light) ** 2 + b
    else:
        constants = {**LIGHT_DARK_HYPERBOLIC, **params}
        a, b, c = constants["a"], constants["b"], constants["c"]

        def noise_scale(x):
            if x[0] + c <= 0.0:
                raise EvaluationError(f"hyperbolic light-dark undefined at x={x[0]} (x + c <= 0)")
            return a / (x[0] + c) + b

    selector = np.zeros((position_dims, state_dim))
    selector[:, :position_dims] = np.eye(position_dims)

    def fn(x, v):
        return selector @ x + noise_scale(x) * v

    def jacobian_fn(x):
        return selector.copy(), noise_scale(x) * np.eye(position_dims)

    logger.debug(f"{kind} sensor constants: {constants}")
    return ObservationModel(name=kind, obs_dim=position_dims, noise_dim=position_dims,
                            fn=fn, jacobian_fn=jacobian_fn)


def make_observation_model(kind, landmark_map=None, params=None, state_dim=3, position_dims=2):
    """
    관측 모델 생성

    Args:
        kind: range_bearing, bearing_only, range_only, range_squared,
              light_dark_quadratic, light_dark_hyperbolic 중 하나
        landmark_map: LandmarkMap (랜드마크 기반 센서에서 필수)
        params: 모델 상수 (light-dark의 a, b, c, light)
        state_dim: 상태 차원
        position_dims: 위치 좌표 개수 (상태 벡터 앞쪽)

    Returns:
        ObservationModel
    """
    params = dict(params or {})
    if kind in LANDMARK_KINDS:
        if landmark_map is None or len(landmark_map) == 0:
            raise ConfigurationError(f"{kind} requires a non-empty landmark map")
        landmarks = [tuple(p) for p in landmark_map.positions]
        return _landmark_model(kind, landmarks, state_dim)
    if kind in LIGHT_DARK_KINDS:
        return _light_dark_model(kind, params, state_dim, position_dims)
    raise ConfigurationError(f"unknown observation model kind: {kind}")


def linear_observation(H, M):
    """
    선형 관측 모델 z = H x + M v
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != H.shape[0]:
        raise ConfigurationError(f"inconsistent linear observation shapes H{H.shape} M{M.shape}")

    def fn(x, v):
        return H @ x + M @ v

    def jacobian_fn(x):
        return H.copy(), M.copy()

    return ObservationModel(name="linear", obs_dim=H.shape[0], noise_dim=M.shape[1],
                            fn=fn, jacobian_fn=jacobian_fn)
