"""
장애물 장벽 함수(OBF)와 궤적 구간의 장애물 비용

Phi(x) = sum_i [ M1 exp(-((x-c)^T E (x-c))^q)
                 + M2 sum_theta (||x - (theta zeta1 + (1-theta) zeta2)||^-2
                                 + ||x - (theta xi1 + (1-theta) xi2)||^-2) ]
"""

import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from run.config import (OBF_M1, OBF_M2, OBF_Q, OBF_RIEMANN_POINTS, OBF_SAMPLES_PER_AXIS,
                        OBF_SINGULAR_RADIUS, OBF_SINGULAR_VALUE)
from run.obstacles.ellipsoid import Ellipsoid, polygon_ellipsoid
from run.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ObstacleSet:
    """
    타원체 목록과 장벽 상수

    eps_m = 1/m (정수 m >= 1) 간격으로 각 축에서 m+1개 점을 샘플링한다.
    """

    ellipsoids: Tuple[Ellipsoid, ...] = ()
    m1: float = OBF_M1
    m2: float = OBF_M2
    q: int = OBF_Q
    eps_m: float = 1.0 / OBF_SAMPLES_PER_AXIS
    riemann_points: int = OBF_RIEMANN_POINTS
    axis_samples: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "ellipsoids", tuple(self.ellipsoids))
        if self.m1 < 0 or self.m2 < 0:
            raise ConfigurationError(f"barrier amplitudes must be non-negative (m1={self.m1}, m2={self.m2})")
        if int(self.q) != self.q or self.q < 1:
            raise ConfigurationError(f"barrier exponent q must be a positive integer, got {self.q}")
        divisions = 1.0 / self.eps_m if self.eps_m > 0 else 0.0
        if self.eps_m <= 0 or abs(divisions - round(divisions)) > 1e-9 or round(divisions) < 1:
            raise ConfigurationError(f"eps_m must be 1/m for an integer m >= 1, got {self.eps_m}")
        if int(self.riemann_points) != self.riemann_points or self.riemann_points < 1:
            raise ConfigurationError(f"riemann_points must be >= 1, got {self.riemann_points}")
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(self, "riemann_points", int(self.riemann_points))
        object.__setattr__(self, "axis_samples", self._build_samples(int(round(divisions))))

    def _build_samples(self, divisions):
        if not self.ellipsoids:
            return np.zeros((0, 2))
        theta = np.linspace(0.0, 1.0, divisions + 1)[:, None]
        samples = []
        for ellipsoid in self.ellipsoids:
            (zeta1, zeta2), (xi1, xi2) = ellipsoid.axes
            samples.append(theta * zeta1 + (1.0 - theta) * zeta2)
            samples.append(theta * xi1 + (1.0 - theta) * xi2)
        return np.vstack(samples)

    def __len__(self):
        return len(self.ellipsoids)

    @classmethod
    def from_polygons(cls, polygons, radius=0.0, **constants):
        """다각형 꼭짓점 목록에서 팽창 + MVEE로 ObstacleSet 생성"""
        ellipsoids = [polygon_ellipsoid(vertices, radius) for vertices in polygons]
        return cls(tuple(ellipsoids), **constants)

    def transformed(self, rotation, translation):
        return ObstacleSet(tuple(e.transformed(rotation, translation) for e in self.ellipsoids),
                           self.m1, self.m2, self.q, self.eps_m, self.riemann_points)


def obf_value(obstacles, x):
    """
    장벽 함수 Phi 평가

    Args:
        obstacles: ObstacleSet
        x: 위치 (d,) 또는 위치 배열 (N, d)

    Returns:
        Phi >= 0 (스칼라 또는 (N,) 배열); 축 샘플점과 1e-9 이내이면 1e18로 고정
    """
    points = np.asarray(x, dtype=float)
    single = points.ndim == 1
    points = np.atleast_2d(points)
    values = np.zeros(points.shape[0])
    if not obstacles.ellipsoids:
        return float(values[0]) if single else values

    for ellipsoid in obstacles.ellipsoids:
        quadratic = ellipsoid.quadratic_form(points)
        values += obstacles.m1 * np.exp(-np.power(quadratic, obstacles.q))

    if obstacles.m2 > 0:
        diff = points[:, None, :] - obstacles.axis_samples[None, :, :]
        squared = np.einsum("nsd,nsd->ns", diff, diff)
        singular = squared.min(axis=1) <= OBF_SINGULAR_RADIUS ** 2
        with np.errstate(divide="ignore"):
            values += obstacles.m2 * np.sum(1.0 / np.where(squared > 0, squared, np.inf), axis=1)
        if np.any(singular):
            logger.warning(f"{int(singular.sum())} point(s) within {OBF_SINGULAR_RADIUS:g} of an axis sample; "
                           f"OBF clamped to {OBF_SINGULAR_VALUE:g}")
            values[singular] = OBF_SINGULAR_VALUE
    values = np.minimum(values, OBF_SINGULAR_VALUE)
    return float(values[0]) if single else values


def _segment_midpoints(obstacles, starts, ends):
    fractions = (np.arange(1, obstacles.riemann_points + 1) - 0.5) / obstacles.riemann_points
    return starts[:, None, :] + fractions[None, :, None] * (ends - starts)[:, None, :]


def obstacle_cost(obstacles, x1, x2):
    """
    구간 [x1, x2]에서 Phi의 선적분 (중점 Riemann 합)

    (||x2 - x1|| / R) sum_j Phi(x1 + ((j - 1/2) / R)(x2 - x1))
    """
    return float(segment_costs(obstacles, np.atleast_2d(x1), np.atleast_2d(x2))[0])


def segment_costs(obstacles, starts, ends):
    """여러 구간의 obstacle_cost를 한 번에 계산"""
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    ends = np.atleast_2d(np.asarray(ends, dtype=float))
    lengths = np.linalg.norm(ends - starts, axis=1)
    if not obstacles.ellipsoids:
        return np.zeros(starts.shape[0])
    midpoints = _segment_midpoints(obstacles, starts, ends)
    values = obf_value(obstacles, midpoints.reshape(-1, starts.shape[1]))
    values = values.reshape(starts.shape[0], obstacles.riemann_points)
    costs = lengths / obstacles.riemann_points * values.sum(axis=1)
    return np.where(lengths > 0, costs, 0.0)


def trajectory_obstacle_cost(obstacles, positions):
    """연속한 위치 사이 구간 비용의 합"""
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    if positions.shape[0] < 2:
        return 0.0
    return float(segment_costs(obstacles, positions[:-1], positions[1:]).sum())
