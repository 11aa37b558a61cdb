"""
공통 수치 유틸리티: 유한 차분, 대칭화, 정칙화된 역행렬, 가우시안 샘플링
"""

import logging

import numpy as np
from scipy.linalg import lapack

from run.config import CONDITION_LIMIT, REGULARIZATION_FLOOR
from run.utils.errors import EvaluationError, NumericalError

logger = logging.getLogger(__name__)


def finite_difference_jacobian(fn, point, step=1e-6):
    """
    중앙 차분 Jacobian 계산

    Args:
        fn: 벡터 -> 벡터 함수
        point: 평가 지점
        step: 차분 간격 (> 0)

    Returns:
        (len(fn(point)), len(point)) 행렬, j번째 열은
        (fn(point + step e_j) - fn(point - step e_j)) / (2 step)
    """
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    point = np.asarray(point, dtype=float)
    columns = []
    for j in range(point.size):
        offset = np.zeros_like(point)
        offset[j] = step
        forward = np.atleast_1d(np.asarray(fn(point + offset), dtype=float))
        backward = np.atleast_1d(np.asarray(fn(point - offset), dtype=float))
        if not (np.all(np.isfinite(forward)) and np.all(np.isfinite(backward))):
            raise EvaluationError(f"non-finite function value while differencing coordinate {j}")
        columns.append((forward - backward) / (2.0 * step))
    if not columns:
        return np.zeros((np.atleast_1d(fn(point)).size, 0))
    return np.column_stack(columns)


def symmetrize(matrix):
    """(P + P^T) / 2"""
    matrix = np.asarray(matrix, dtype=float)
    return 0.5 * (matrix + matrix.T)


def regularized_inverse(matrix, label="matrix", time_index=None):
    """
    조건수가 CONDITION_LIMIT를 넘으면 REGULARIZATION_FLOOR * I를 더한 뒤 역행렬 계산

    Args:
        matrix: 정방 행렬
        label: 로그/예외 메시지에 사용할 이름
        time_index: 오류 보고용 시간 인덱스

    Returns:
        역행렬
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    condition = np.linalg.cond(matrix)
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        logger.warning(f"{label} ill-conditioned (cond={condition:.3e}), adding {REGULARIZATION_FLOOR:g}*I")
        matrix = matrix + REGULARIZATION_FLOOR * np.eye(matrix.shape[0])
        condition = np.linalg.cond(matrix)
        if not np.isfinite(condition) or condition > 1.0 / np.finfo(float).eps:
            raise NumericalError(f"{label} singular beyond regularization floor",
                                 condition=condition, time_index=time_index)
    return np.linalg.inv(matrix)


def pivoted_cholesky(matrix):
    """
    PSD 행렬의 피벗 Cholesky 분해 (A = W^T W)

    Args:
        matrix: 대칭 PSD 행렬

    Returns:
        W (행 순서는 피벗 순서, rank 이후 행은 0)
    """
    matrix = symmetrize(matrix)
    n = matrix.shape[0]
    if not np.any(matrix):
        return np.zeros((n, n))
    factor, piv, rank, info = lapack.dpstrf(matrix, lower=0)
    if info < 0:
        raise NumericalError(f"pivoted Cholesky failed (info={info})")
    upper = np.triu(factor)
    upper[rank:, :] = 0.0
    weight = np.zeros((n, n))
    weight[:, piv - 1] = upper
    return weight


def gaussian_factor(covariance):
    """
    공분산의 하삼각 인자 L (L L^T = P); 특이 행렬은 고유분해로 대체
    """
    covariance = symmetrize(np.atleast_2d(covariance))
    try:
        return np.linalg.cholesky(covariance)
    except np.linalg.LinAlgError:
        eigenvalues, eigenvectors = np.linalg.eigh(covariance)
        return eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))


def sample_gaussian(mean, covariance, rng, size=None):
    """
    N(mean, covariance) 샘플링 (인자 * 표준정규)

    Args:
        mean: 평균 벡터
        covariance: 공분산 행렬
        rng: numpy Generator
        size: 샘플 개수 (None이면 단일 벡터)

    Returns:
        (size, n) 또는 (n,) 배열
    """
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    factor = gaussian_factor(covariance)
    if size is None:
        return mean + factor @ rng.standard_normal(mean.size)
    draws = rng.standard_normal((size, mean.size))
    return mean + draws @ factor.T


def make_rng(seed):
    """카운터 기반(Philox) 난수 생성기"""
    return np.random.Generator(np.random.Philox(seed))


def wrap_angle(angle):
    """각도를 (-pi, pi] 범위로 래핑"""
    wrapped = np.mod(np.asarray(angle, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(wrapped == -np.pi, np.pi, wrapped)


def require_finite(values, label, time_index=None):
    """유한하지 않은 값이 있으면 EvaluationError"""
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        where = f" at t={time_index}" if time_index is not None else ""
        raise EvaluationError(f"non-finite {label}{where}")
    return values
