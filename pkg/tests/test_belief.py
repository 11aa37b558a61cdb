import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from run.belief.belief_metrics import goal_probability, symmetric_kl_distance
from run.belief.filtering import LinearizationPoint, kf_mean_update
from run.belief.gaussian_belief import (CostWeights, GaussianBelief, forward_riccati_step,
                                        propagate_nominal_covariance, riccati_step, update_gain)
from run.models.model_types import NoiseSpec
from run.planning.trajectory import propagate_nominal
from run.utils.errors import NumericalError

entries = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False, allow_infinity=False)
square3 = arrays(np.float64, (3, 3), elements=entries)


def _spd(root, floor=0.1):
    return root @ root.T + floor * np.eye(root.shape[0])


def test_riccati_step_scalar_hand_check():
    noise = NoiseSpec([[1.0]], [[1.0]])
    one = np.eye(1)
    step = riccati_step(one, one, one, one, one, noise)
    assert step.p_minus[0, 0] == pytest.approx(2.0)
    assert step.s[0, 0] == pytest.approx(3.0)
    assert step.k[0, 0] == pytest.approx(2.0 / 3.0)
    assert step.p_plus[0, 0] == pytest.approx(2.0 / 3.0)


def test_riccati_step_without_measurement_keeps_prior():
    noise = NoiseSpec(0.5 * np.eye(2), np.eye(1))
    step = riccati_step(np.eye(2), np.eye(2), np.eye(2), np.zeros((1, 2)), np.eye(1), noise)
    assert_allclose(step.k, np.zeros((2, 1)))
    assert_allclose(step.p_plus, 1.5 * np.eye(2))


def test_riccati_step_zero_noise_zero_prior():
    noise = NoiseSpec(np.zeros((2, 2)), np.zeros((2, 2)))
    step = riccati_step(np.zeros((2, 2)), np.eye(2), np.eye(2), np.eye(2), np.eye(2), noise)
    assert_allclose(step.p_plus, np.zeros((2, 2)))
    assert np.all(np.isfinite(step.k))


@given(a=square3, g=square3, h=square3, p=square3, w=square3, v=square3)
def test_posterior_is_symmetric_psd_and_below_prior(a, g, h, p, w, v):
    noise = NoiseSpec(_spd(w), _spd(v))
    step = riccati_step(_spd(p), a, g, h, np.eye(3), noise)
    assert_allclose(step.p_plus, step.p_plus.T, atol=1e-12)
    scale = 1.0 + np.abs(step.p_minus).max()
    assert np.linalg.eigvalsh(step.p_plus).min() >= -1e-9 * scale
    assert np.trace(step.p_plus) <= np.trace(step.p_minus) + 1e-9 * scale


@given(a=square3, p=square3, w=square3, h=arrays(np.float64, (1, 3), elements=entries),
       v=st.floats(min_value=0.1, max_value=2.0))
def test_second_identical_sensor_never_increases_posterior_trace(a, p, w, h, v):
    single = riccati_step(_spd(p), a, np.eye(3), h, np.eye(1), NoiseSpec(_spd(w), [[v]]))
    stacked = riccati_step(_spd(p), a, np.eye(3), np.vstack([h, h]), np.eye(2), NoiseSpec(_spd(w), v * np.eye(2)))
    scale = 1.0 + np.abs(single.p_minus).max()
    assert np.trace(stacked.p_plus) <= np.trace(single.p_plus) + 1e-9 * scale


def test_chained_riccati_steps_stay_symmetric_psd(rng):
    n = 3
    a = rng.standard_normal((n, n))
    a *= 0.95 / np.abs(np.linalg.eigvals(a)).max()
    g = rng.standard_normal((n, n))
    h = rng.standard_normal((2, n))
    noise = NoiseSpec(_spd(rng.standard_normal((n, n)), 0.01), _spd(rng.standard_normal((2, 2)), 0.01))
    covariance = np.eye(n)
    for t in range(1000):
        step = riccati_step(covariance, a, g, h, np.eye(2), noise, time_index=t)
        for matrix in (step.p_minus, step.p_plus):
            assert_allclose(matrix, matrix.T, atol=1e-12)
            assert np.linalg.eigvalsh(matrix).min() >= -1e-9
        covariance = step.p_plus


def test_propagate_nominal_covariance_is_a_function_of_the_trajectory(scalar_lti):
    motion, obs = scalar_lti
    noise = NoiseSpec([[0.1]], [[0.2]])
    trajectory = propagate_nominal([0.0], np.ones((5, 1)), motion)
    first = propagate_nominal_covariance(trajectory, motion, obs, noise, [[1.0]])
    second = propagate_nominal_covariance(trajectory, motion, obs, noise, [[1.0]])
    assert len(first) == 5
    for a, b in zip(first, second):
        assert_allclose(a.p_plus, b.p_plus, rtol=0, atol=0)
    # 스칼라 정상 상태로 단조 수렴
    traces = [step.p_plus[0, 0] for step in first]
    assert all(x >= y for x, y in zip(traces, traces[1:]))


def test_forward_riccati_step_scalar_hand_check():
    noise = NoiseSpec([[1.0]], [[1.0]])
    one = np.eye(1)
    gain, p_next = forward_riccati_step(one, one, one, one, one, noise)
    assert gain[0, 0] == pytest.approx(0.5)
    assert p_next[0, 0] == pytest.approx(1.5)


def test_update_gain_scalar_hand_check():
    noise = NoiseSpec([[1.0]], [[1.0]])
    gain = update_gain(2.0 * np.eye(1), np.eye(1), np.eye(1), noise)
    assert gain[0, 0] == pytest.approx(2.0 / 3.0)


def test_cost_weights_factor_reproduces_weight():
    weight = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.0], [0.0, 0.0, 0.0]])
    weights = CostWeights([weight], [np.eye(1)])
    factor = weights.w_chol[0]
    assert_allclose(factor.T @ factor, weight, atol=1e-12)


def test_cost_weights_uniform_scalar():
    weights = CostWeights.uniform(2.0, 0.5, horizon=4, state_dim=3, control_dim=2)
    assert weights.horizon == 4
    assert_allclose(weights.w_x[3], 2.0 * np.eye(3))
    assert_allclose(weights.w_u[0], 0.5 * np.eye(2))


def test_gaussian_belief_symmetrizes_and_checks_shape():
    belief = GaussianBelief([0.0, 0.0], [[1.0, 0.2], [0.0, 1.0]])
    assert_allclose(belief.covariance, [[1.0, 0.1], [0.1, 1.0]])
    with pytest.raises(ValueError):
        GaussianBelief([0.0], np.eye(2))


def test_kl_distance_scalar_hand_check():
    d = symmetric_kl_distance(GaussianBelief([0.0], [[1.0]]), GaussianBelief([1.0], [[1.0]]))
    assert d == pytest.approx(0.5)


def test_kl_distance_covariance_only():
    # P1 = 1, P2 = 2: (2 + 1/2 - 2) / 4
    d = symmetric_kl_distance(GaussianBelief([0.0], [[1.0]]), GaussianBelief([0.0], [[2.0]]))
    assert d == pytest.approx(0.125)


@given(m1=arrays(np.float64, 3, elements=entries), m2=arrays(np.float64, 3, elements=entries),
       r1=square3, r2=square3)
def test_kl_distance_is_symmetric_and_non_negative(m1, m2, r1, r2):
    b1 = GaussianBelief(m1, _spd(r1, 0.5))
    b2 = GaussianBelief(m2, _spd(r2, 0.5))
    forward = symmetric_kl_distance(b1, b2)
    assert forward >= 0.0
    assert forward == pytest.approx(symmetric_kl_distance(b2, b1), rel=1e-9, abs=1e-12)
    assert symmetric_kl_distance(b1, b1) == pytest.approx(0.0, abs=1e-9)


def test_kl_distance_rejects_singular_covariance():
    with pytest.raises(NumericalError):
        symmetric_kl_distance(GaussianBelief([0.0, 0.0], np.zeros((2, 2))), GaussianBelief([0.0, 0.0], np.eye(2)))


def test_goal_probability_extremes():
    goal = np.array([1.0, 1.0, 0.0])
    tight = GaussianBelief(goal, 1e-8 * np.eye(3))
    far = GaussianBelief(goal + 10.0, 1e-2 * np.eye(3))
    assert goal_probability(tight, goal, 0.1, samples=500, dims=2) == 1.0
    assert goal_probability(far, goal, 0.1, samples=500, dims=2) == 0.0


def test_goal_probability_ignores_heading():
    goal = np.array([0.0, 0.0, 0.0])
    belief = GaussianBelief([0.0, 0.0, 3.0], 1e-8 * np.eye(3))
    assert goal_probability(belief, goal, 0.1, samples=100, dims=2) == 1.0


def test_goal_probability_matches_closed_form():
    # 2차원 등방성: Pr(||x|| < r) = 1 - exp(-r^2 / (2 s^2))
    belief = GaussianBelief([0.0, 0.0], np.eye(2))
    estimate = goal_probability(belief, [0.0, 0.0], 1.0, samples=20000, seed=3)
    assert estimate == pytest.approx(1.0 - np.exp(-0.5), abs=0.02)


def test_goal_probability_is_deterministic_per_seed():
    belief = GaussianBelief([0.0, 0.0], np.eye(2))
    first = goal_probability(belief, [0.5, 0.0], 1.0, samples=1000, seed=[7, 2])
    second = goal_probability(belief, [0.5, 0.0], 1.0, samples=1000, seed=[7, 2])
    assert first == second


@pytest.mark.parametrize("radius, samples", [(0.0, 10), (-1.0, 10), (1.0, 0)])
def test_goal_probability_rejects_bad_arguments(radius, samples):
    with pytest.raises(ValueError):
        goal_probability(GaussianBelief([0.0], [[1.0]]), [0.0], radius, samples=samples)


def test_kf_mean_update_scalar(scalar_lti):
    motion, obs = scalar_lti
    lin = LinearizationPoint.from_models(motion, obs, np.zeros(1), np.zeros(1), np.zeros(1))
    assert_allclose(lin.f_offset, [0.0])
    assert_allclose(lin.h_offset, [0.0])
    mean = kf_mean_update(GaussianBelief([0.0], [[1.0]]), [1.0], [2.0], lin, np.array([[0.5]]))
    assert_allclose(mean, [1.5])


def test_kf_mean_update_wraps_bearing_innovation():
    lin = LinearizationPoint(np.zeros(1), np.zeros(1), np.eye(1), np.eye(1), np.eye(1),
                             np.zeros(1), np.zeros(1))
    predicted = -np.pi + 0.1
    mean = kf_mean_update(np.array([predicted]), [0.0], [np.pi - 0.1], lin, np.eye(1), angle_indices=(0,))
    assert_allclose(mean, [predicted - 0.2], atol=1e-12)
