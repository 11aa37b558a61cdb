import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from run.models.model_types import LandmarkMap, NoiseSpec
from run.models.motion_models import linear_motion, mecanum_kinematics, youbot_motion
from run.models.observation_models import linear_observation, make_observation_model
from run.utils.errors import ConfigurationError, EvaluationError, SingularPointError
from run.utils.numerics import finite_difference_jacobian

coordinates = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)


def test_youbot_equal_wheel_speeds_drive_forward():
    motion = youbot_motion()
    x = motion.evaluate(np.zeros(3), np.ones(4))
    assert_allclose(x, [0.05, 0.0, 0.0], atol=1e-15)


def test_youbot_opposed_wheels_rotate_in_place():
    motion = youbot_motion()
    x = motion.evaluate(np.zeros(3), np.array([-1.0, 1.0, -1.0, 1.0]))
    assert_allclose(x[:2], [0.0, 0.0], atol=1e-15)
    assert x[2] == pytest.approx(0.05 / (0.235 + 0.15))


def test_youbot_zero_control_keeps_state():
    motion = youbot_motion()
    state = np.array([0.3, -1.2, 0.7])
    assert_allclose(motion.evaluate(state, np.zeros(4)), state)


def test_youbot_noise_scales_with_sqrt_dt():
    motion = youbot_motion(dt=4.0)
    x = motion.evaluate(np.zeros(3), np.zeros(4), np.array([1.0, 0.0, 0.0]))
    assert x[0] == pytest.approx(2.0)


def test_youbot_jacobians_match_kinematics():
    motion = youbot_motion(dt=0.5)
    A, B, G = motion.jacobians(np.zeros(3), np.zeros(4))
    assert_allclose(A, np.eye(3))
    assert_allclose(B, 0.5 * mecanum_kinematics(0.05, 0.235, 0.15))
    assert_allclose(G, np.sqrt(0.5) * np.eye(3))


@pytest.mark.parametrize("kwargs", [{"dt": 0.0}, {"dt": -1.0}, {"wheel_radius": 0.0}, {"half_width": -0.1}])
def test_youbot_rejects_bad_geometry(kwargs):
    with pytest.raises(ConfigurationError):
        youbot_motion(**kwargs)


def test_linear_motion_shape_mismatch():
    with pytest.raises(ConfigurationError):
        linear_motion(np.eye(2), np.ones((3, 1)), np.eye(2))


@pytest.mark.parametrize("kind", ["range_bearing", "bearing_only", "range_only", "range_squared"])
@given(x=coordinates, y=coordinates, theta=st.floats(min_value=-0.5, max_value=0.5))
def test_landmark_jacobian_matches_finite_differences(kind, x, y, theta):
    landmarks = LandmarkMap(((4.0, 4.0), (0.5, 6.0)))
    obs = make_observation_model(kind, landmarks, state_dim=3)
    state = np.array([x, y, theta])
    H, M = obs.jacobians(state)
    numeric = finite_difference_jacobian(lambda s: obs.fn(s, np.zeros(obs.noise_dim)), state, 1e-6)
    assert_allclose(H, numeric, atol=1e-5)
    assert_allclose(M, np.eye(obs.obs_dim))


def test_range_bearing_stacks_one_block_per_landmark():
    obs = make_observation_model("range_bearing", LandmarkMap(((3.0, 4.0), (0.0, 1.0))), state_dim=3)
    z = obs.evaluate(np.zeros(3))
    assert obs.obs_dim == 4
    assert obs.angle_indices == (1, 3)
    assert_allclose(z, [5.0, np.arctan2(4.0, 3.0), 1.0, np.pi / 2])


def test_bearing_is_wrapped():
    obs = make_observation_model("bearing_only", LandmarkMap(((-1.0, 1e-3),)), state_dim=3)
    z = obs.evaluate(np.array([0.0, 0.0, -1.0]))
    assert -np.pi < z[0] <= np.pi


def test_bearing_at_landmark_is_singular():
    obs = make_observation_model("range_bearing", LandmarkMap(((1.0, 1.0),)), state_dim=3)
    with pytest.raises(SingularPointError):
        obs.evaluate(np.array([1.0, 1.0, 0.0]))


def test_range_squared_is_defined_at_landmark():
    obs = make_observation_model("range_squared", LandmarkMap(((1.0, 1.0),)), state_dim=3)
    assert_allclose(obs.evaluate(np.array([1.0, 1.0, 0.0])), [0.0])


def test_bearing_needs_heading():
    with pytest.raises(ConfigurationError):
        make_observation_model("bearing_only", LandmarkMap(((1.0, 1.0),)), state_dim=2)


def test_landmark_sensor_needs_landmarks():
    with pytest.raises(ConfigurationError):
        make_observation_model("range_only", LandmarkMap(()), state_dim=3)


def test_unknown_observation_kind():
    with pytest.raises(ConfigurationError):
        make_observation_model("sonar", LandmarkMap(((0.0, 0.0),)))


def test_light_dark_quadratic_noise_is_smallest_in_the_light():
    obs = make_observation_model("light_dark_quadratic", state_dim=2, params={"a": 0.1, "b": 0.01, "light": 3.0})
    _, M_light = obs.jacobians(np.array([3.0, 0.0]))
    _, M_dark = obs.jacobians(np.array([0.0, 0.0]))
    assert_allclose(M_light, 0.01 * np.eye(2))
    assert_allclose(M_dark, (0.1 * 9.0 + 0.01) * np.eye(2))


def test_light_dark_observes_position():
    obs = make_observation_model("light_dark_quadratic", state_dim=3)
    assert_allclose(obs.evaluate(np.array([1.0, 2.0, 0.5])), [1.0, 2.0])


def test_hyperbolic_light_dark_undefined_left_of_pole():
    obs = make_observation_model("light_dark_hyperbolic", state_dim=2, params={"c": 1.0})
    with pytest.raises(EvaluationError):
        obs.evaluate(np.array([-1.5, 0.0]))


def test_linear_observation():
    obs = linear_observation([[1.0, 0.0]], [[2.0]])
    assert_allclose(obs.evaluate(np.array([3.0, 4.0]), np.array([0.5])), [4.0])


def test_noise_spec_validation():
    with pytest.raises(ConfigurationError):
        NoiseSpec([[1.0, 0.5], [0.0, 1.0]], [[1.0]])
    with pytest.raises(ConfigurationError):
        NoiseSpec([[-1.0]], [[1.0]])
    spec = NoiseSpec.isotropic(0.1, 0.2, 3, 2)
    assert_allclose(spec.sigma_omega, 0.1 * np.eye(3))
    assert_allclose(spec.sigma_nu, 0.2 * np.eye(2))


def test_non_finite_motion_is_an_evaluation_error():
    motion = linear_motion([[1.0]], [[1.0]], [[1.0]])
    with pytest.raises(EvaluationError):
        motion.evaluate([np.inf], [0.0])
