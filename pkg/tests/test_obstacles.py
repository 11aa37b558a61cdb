import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from run.config import OBF_SINGULAR_VALUE
from run.obstacles.barrier import ObstacleSet, obf_value, obstacle_cost, segment_costs, trajectory_obstacle_cost
from run.obstacles.ellipsoid import Ellipsoid, inflate_polygon, mvee, polygon_ellipsoid
from run.utils.errors import ConfigurationError

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])

coordinate = st.integers(min_value=-50, max_value=50).map(lambda k: k / 10.0)
point_clouds = st.integers(min_value=3, max_value=12).flatmap(
    lambda n: arrays(np.float64, (n, 2), elements=coordinate))


def _area_factor(ellipsoid):
    return 1.0 / np.sqrt(np.linalg.det(ellipsoid.shape))


def test_mvee_unit_square_is_circumscribed_circle():
    ellipsoid = polygon_ellipsoid(UNIT_SQUARE, 0.0)
    assert_allclose(ellipsoid.center, [0.5, 0.5], atol=1e-9)
    assert_allclose(ellipsoid.shape, 2.0 * np.eye(2), atol=1e-6)
    assert_allclose(ellipsoid.quadratic_form(UNIT_SQUARE), np.ones(4), atol=1e-6)
    assert not ellipsoid.regularized


def test_inflated_square_gives_strictly_larger_ellipse():
    plain = polygon_ellipsoid(UNIT_SQUARE, 0.0)
    inflated = polygon_ellipsoid(UNIT_SQUARE, 0.1)
    assert _area_factor(inflated) > _area_factor(plain)
    assert np.all(inflated.quadratic_form(UNIT_SQUARE) < 1.0)


def test_inflate_polygon_rings_each_vertex():
    points = inflate_polygon(UNIT_SQUARE, 0.2)
    assert points.shape == (32, 2)
    distances = np.linalg.norm(points.reshape(4, 8, 2) - UNIT_SQUARE[:, None, :], axis=2)
    assert_allclose(distances, 0.2)


def test_inflate_polygon_zero_radius_is_identity():
    assert_allclose(inflate_polygon(UNIT_SQUARE, 0.0), UNIT_SQUARE)


@pytest.mark.parametrize("vertices, radius", [(UNIT_SQUARE[:2], 0.0), (UNIT_SQUARE, -0.1)])
def test_inflate_polygon_rejects_bad_input(vertices, radius):
    with pytest.raises(ConfigurationError):
        inflate_polygon(vertices, radius)


@given(points=point_clouds)
def test_mvee_contains_every_point(points):
    ellipsoid = mvee(points)
    assert np.all(np.isfinite(ellipsoid.shape))
    assert np.all(ellipsoid.quadratic_form(points) <= 1.0 + 1e-6)


def test_mvee_collinear_points_are_regularized():
    points = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    ellipsoid = mvee(points)
    assert ellipsoid.regularized
    assert np.all(ellipsoid.quadratic_form(points) <= 1.0 + 1e-6)


def test_mvee_iteration_cap_still_contains_points():
    points = np.array([[0.0, 0.0], [3.0, 0.2], [1.0, 2.0], [-1.0, 1.5], [2.5, 2.5]])
    ellipsoid = mvee(points, max_iterations=2)
    assert ellipsoid.iterations <= 2
    assert np.all(ellipsoid.quadratic_form(points) <= 1.0 + 1e-7)


def test_mvee_needs_points():
    with pytest.raises(ConfigurationError):
        mvee(np.zeros((0, 2)))


def test_ellipsoid_axes_endpoints():
    ellipsoid = Ellipsoid([1.0, -1.0], np.diag([0.25, 1.0]))
    (zeta1, zeta2), (xi1, xi2) = ellipsoid.axes
    assert_allclose(sorted([zeta1[0], zeta2[0]]), [-1.0, 3.0])
    assert_allclose([zeta1[1], zeta2[1]], [-1.0, -1.0])
    assert_allclose(sorted([xi1[1], xi2[1]]), [-2.0, 0.0])
    assert_allclose(ellipsoid.to_row(), [1.0, -1.0, 0.25, 0.0, 1.0])


def test_ellipsoid_shape_must_match_center():
    with pytest.raises(ConfigurationError):
        Ellipsoid([0.0, 0.0, 0.0], np.eye(2))


def _single_obstacle(**constants):
    return ObstacleSet((Ellipsoid([0.0, 0.0], np.diag([1.0, 4.0])),), **constants)


def test_obf_is_clamped_on_axis_samples():
    obstacles = _single_obstacle()
    # eps_m = 1/10 이므로 중심도 축 샘플점
    assert obf_value(obstacles, np.zeros(2)) == OBF_SINGULAR_VALUE


def test_obf_decays_away_from_obstacle():
    obstacles = _single_obstacle()
    near = obf_value(obstacles, np.array([1.2, 0.3]))
    far = obf_value(obstacles, np.array([20.0, 20.0]))
    assert near > far > 0.0
    assert far < 1e-2


def test_obf_vectorized_matches_pointwise():
    obstacles = _single_obstacle()
    points = np.array([[1.5, 0.2], [-2.0, 1.0], [0.3, 3.0]])
    assert_allclose(obf_value(obstacles, points), [obf_value(obstacles, p) for p in points])


def test_obf_empty_set_is_zero():
    assert obf_value(ObstacleSet(), np.array([1.0, 2.0])) == 0.0
    assert obstacle_cost(ObstacleSet(), np.zeros(2), np.ones(2)) == 0.0


@given(angle=st.floats(min_value=-np.pi, max_value=np.pi),
       shift=arrays(np.float64, 2, elements=st.floats(min_value=-3.0, max_value=3.0)),
       x=arrays(np.float64, 2, elements=st.floats(min_value=1.5, max_value=4.0)))
def test_obf_is_invariant_under_rigid_motion(angle, shift, x):
    obstacles = _single_obstacle()
    rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    moved = obstacles.transformed(rotation, shift)
    assert obf_value(moved, rotation @ x + shift) == pytest.approx(obf_value(obstacles, x), rel=1e-7)


def test_obstacle_cost_is_midpoint_riemann_sum():
    obstacles = _single_obstacle(riemann_points=4)
    x1, x2 = np.array([1.5, -1.0]), np.array([1.5, 1.0])
    fractions = (np.arange(1, 5) - 0.5) / 4
    expected = 2.0 / 4 * sum(obf_value(obstacles, x1 + f * (x2 - x1)) for f in fractions)
    assert obstacle_cost(obstacles, x1, x2) == pytest.approx(expected)


def test_zero_length_segment_costs_nothing():
    obstacles = _single_obstacle()
    assert obstacle_cost(obstacles, np.array([2.0, 2.0]), np.array([2.0, 2.0])) == 0.0


def test_segment_costs_match_single_segments():
    obstacles = _single_obstacle()
    positions = np.array([[2.0, -2.0], [2.0, 0.5], [1.5, 2.0], [-2.0, 2.5]])
    costs = segment_costs(obstacles, positions[:-1], positions[1:])
    assert_allclose(costs, [obstacle_cost(obstacles, a, b) for a, b in zip(positions[:-1], positions[1:])])
    assert trajectory_obstacle_cost(obstacles, positions) == pytest.approx(costs.sum())


def test_segment_through_obstacle_costs_more_than_detour():
    obstacles = _single_obstacle()
    through = obstacle_cost(obstacles, np.array([-2.0, 0.1]), np.array([2.0, 0.1]))
    detour = obstacle_cost(obstacles, np.array([-2.0, 2.0]), np.array([2.0, 2.0]))
    assert through > detour


@pytest.mark.parametrize("constants", [{"q": 0}, {"eps_m": 0.3}, {"riemann_points": 0}, {"m1": -1.0}])
def test_obstacle_set_rejects_bad_constants(constants):
    with pytest.raises(ConfigurationError):
        _single_obstacle(**constants)


def test_obstacle_set_from_polygons():
    obstacles = ObstacleSet.from_polygons([UNIT_SQUARE, UNIT_SQUARE + 3.0], radius=0.1)
    assert len(obstacles) == 2
    assert obstacles.axis_samples.shape == (2 * 2 * 11, 2)
