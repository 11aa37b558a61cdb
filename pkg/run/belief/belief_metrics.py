"""
신뢰 사이의 거리(대칭 KL)와 목표 도달 확률
"""

import logging

import numpy as np

from run.config import GOAL_SAMPLES
from run.utils.errors import NumericalError
from run.utils.numerics import make_rng, sample_gaussian

logger = logging.getLogger(__name__)


def _cholesky(covariance, label):
    try:
        return np.linalg.cholesky(covariance)
    except np.linalg.LinAlgError:
        raise NumericalError(f"{label} covariance is not positive definite",
                             condition=np.linalg.cond(covariance))


def symmetric_kl_distance(b1, b2):
    """
    d = (KL(b1||b2) + KL(b2||b1)) / 2

    log-det 항은 상쇄되므로 d = [tr(P2^-1 P1) + tr(P1^-1 P2) - 2n + dx^T (P1^-1 + P2^-1) dx] / 4

    Args:
        b1, b2: GaussianBelief (공분산은 양의 정부호)

    Returns:
        d >= 0
    """
    n = b1.dim
    l1 = _cholesky(b1.covariance, "first")
    l2 = _cholesky(b2.covariance, "second")
    p1_inv = np.linalg.inv(l1).T @ np.linalg.inv(l1)
    p2_inv = np.linalg.inv(l2).T @ np.linalg.inv(l2)
    delta = b1.mean - b2.mean
    trace_terms = np.trace(p2_inv @ b1.covariance) + np.trace(p1_inv @ b2.covariance) - 2.0 * n
    mahalanobis = delta @ (p1_inv + p2_inv) @ delta
    return max(0.25 * (trace_terms + mahalanobis), 0.0)


def goal_probability(belief, goal, radius, samples=GOAL_SAMPLES, seed=0, dims=None):
    """
    Monte Carlo로 Pr(||x_pos - x_g,pos|| < r_g) 추정

    Args:
        belief: GaussianBelief
        goal: 목표 상태 (앞쪽 dims개 좌표만 사용)
        radius: 목표 반경 r_g (> 0)
        samples: 샘플 수 N (>= 1)
        seed: 난수 시드
        dims: 위치 좌표 개수 (None이면 len(goal))

    Returns:
        [0, 1] 범위의 확률 추정치
    """
    if radius <= 0:
        raise ValueError(f"goal radius must be positive, got {radius}")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    goal = np.atleast_1d(np.asarray(goal, dtype=float))
    dims = goal.size if dims is None else dims
    mean = belief.mean[:dims]
    covariance = belief.covariance[:dims, :dims]
    draws = sample_gaussian(mean, covariance, make_rng(seed), size=samples)
    inside = np.linalg.norm(draws - goal[:dims], axis=1) < radius
    return float(np.mean(inside))
