"""
장애물 다각형의 최소 부피 외접 타원체(MVEE) 계산

Khachiyan 쌍대 반복으로 가중치 u를 갱신하며, 볼록 껍질 꼭짓점만 사용해 반복 비용을 줄인다.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from run.config import MVEE_MAX_ITERATIONS, MVEE_REGULARIZATION, MVEE_TOLERANCE
from run.utils.errors import ConfigurationError
from run.utils.numerics import symmetrize

logger = logging.getLogger(__name__)

# 꼭짓점 하나당 팽창 점 개수 (팔각형)
INFLATION_POINTS = 8


@dataclass(frozen=True)
class Ellipsoid:
    """
    내부 = {x : (x - c)^T E (x - c) <= 1}

    regularized는 rank 부족 점 집합을 1e-6만큼 팽창시켜 계산했음을 표시한다.
    """

    center: np.ndarray
    shape: np.ndarray
    regularized: bool = False
    iterations: int = 0

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        shape = symmetrize(np.atleast_2d(self.shape))
        if shape.shape != (center.size, center.size):
            raise ConfigurationError(f"ellipsoid shape {shape.shape} does not match center size {center.size}")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "shape", shape)

    @property
    def dim(self):
        return self.center.size

    def quadratic_form(self, points):
        """(x - c)^T E (x - c); points는 (d,) 또는 (N, d)"""
        diff = np.asarray(points, dtype=float) - self.center
        return np.einsum("...i,ij,...j->...", diff, self.shape, diff)

    def contains(self, points):
        return self.quadratic_form(points) <= 1.0

    @property
    def axes(self):
        """
        장축 끝점 (zeta1, zeta2)와 단축 끝점 (xi1, xi2)

        E의 최소 고유값 방향이 장축이다.
        """
        eigenvalues, eigenvectors = np.linalg.eigh(self.shape)
        major = eigenvectors[:, 0] / np.sqrt(eigenvalues[0])
        minor = eigenvectors[:, -1] / np.sqrt(eigenvalues[-1])
        return (self.center + major, self.center - major), (self.center + minor, self.center - minor)

    def transformed(self, rotation, translation):
        """강체 변환 x -> R x + t 적용"""
        rotation = np.asarray(rotation, dtype=float)
        return Ellipsoid(rotation @ self.center + np.asarray(translation, dtype=float),
                         rotation @ self.shape @ rotation.T, self.regularized, self.iterations)

    def to_row(self):
        """평면 타원체의 출력 행 (c_x, c_y, E11, E12, E22)"""
        return [self.center[0], self.center[1], self.shape[0, 0], self.shape[0, 1], self.shape[1, 1]]


def _null_directions(points):
    centered = points - points.mean(axis=0)
    _, singular_values, vt = np.linalg.svd(centered, full_matrices=True)
    scale = max(1.0, singular_values.max(initial=0.0))
    rank = int(np.sum(singular_values > 1e-12 * scale))
    return vt[rank:]


def _hull_points(points):
    try:
        hull = ConvexHull(points)
    except (QhullError, ValueError):
        return points
    return points[np.unique(hull.simplices)]


def mvee(points, tolerance=MVEE_TOLERANCE, max_iterations=MVEE_MAX_ITERATIONS):
    """
    Khachiyan 알고리즘으로 MVEE 계산

    Args:
        points: (N, d) 점 집합
        tolerance: 포함 허용 오차 (모든 점이 (p-c)^T E (p-c) <= 1 + tolerance)
        max_iterations: 최대 반복 횟수

    Returns:
        Ellipsoid (rank 부족 시 regularized=True)
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] == 0:
        raise ConfigurationError("mvee needs at least one point")
    d = points.shape[1]

    regularized = False
    null = _null_directions(points)
    if len(null):
        logger.warning(f"rank-deficient point set ({len(null)} null directions), inflating by {MVEE_REGULARIZATION:g}")
        offsets = MVEE_REGULARIZATION * np.vstack([null, -null])
        points = (points[:, None, :] + offsets[None, :, :]).reshape(-1, d)
        regularized = True

    hull = _hull_points(points)
    n = hull.shape[0]
    lifted = np.vstack([hull.T, np.ones(n)])
    weights = np.full(n, 1.0 / n)

    iterations = 0
    converged = False
    while iterations < max_iterations:
        x_inv = np.linalg.inv(np.einsum("ij,j,kj->ik", lifted, weights, lifted))
        m = np.einsum("ji,jk,ki->i", lifted, x_inv, lifted)
        j = int(np.argmax(m))
        # (p_j - c)^T E (p_j - c) = (m_j - 1) / d
        if (m[j] - 1.0) / d <= 1.0 + tolerance:
            converged = True
            break
        step = (m[j] - d - 1.0) / ((d + 1.0) * (m[j] - 1.0))
        weights = (1.0 - step) * weights
        weights[j] += step
        iterations += 1

    center = weights @ hull
    covariance = np.einsum("ji,j,jk->ik", hull, weights, hull) - np.outer(center, center)
    shape = np.linalg.inv(covariance) / d
    ellipsoid = Ellipsoid(center, shape, regularized=regularized, iterations=iterations)

    if not converged:
        worst = float(ellipsoid.quadratic_form(points).max())
        logger.warning(f"mvee hit the iteration cap ({max_iterations}); rescaling by {worst:.6g} for containment")
        ellipsoid = Ellipsoid(center, shape / worst, regularized=regularized, iterations=iterations)
    logger.debug(f"mvee: {n} hull points, {iterations} iterations, center={center}")
    return ellipsoid


def inflate_polygon(vertices, radius):
    """
    다각형의 각 꼭짓점을 반지름 radius 원 위의 8개 점으로 대체

    Args:
        vertices: (N, 2) 꼭짓점 목록 (N >= 3)
        radius: 팽창 반지름 (>= 0)

    Returns:
        (8N, 2) 점 배열 (radius = 0이면 원래 꼭짓점)
    """
    vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
    if vertices.shape[0] < 3:
        raise ConfigurationError(f"polygon needs at least 3 vertices, got {vertices.shape[0]}")
    if radius < 0:
        raise ConfigurationError(f"inflation radius must be non-negative, got {radius}")
    if radius == 0:
        return vertices.copy()
    angles = 2.0 * np.pi * np.arange(INFLATION_POINTS) / INFLATION_POINTS
    ring = radius * np.column_stack([np.cos(angles), np.sin(angles)])
    return (vertices[:, None, :] + ring[None, :, :]).reshape(-1, 2)


def polygon_ellipsoid(vertices, radius=0.0, tolerance=MVEE_TOLERANCE):
    """inflate_polygon 후 mvee"""
    return mvee(inflate_polygon(vertices, radius), tolerance=tolerance)
