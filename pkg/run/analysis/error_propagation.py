"""
선형화된 폐루프 LQG 오차의 재귀 시뮬레이션과 비재귀(closed form) 전파식

곱 규약: X_{a:b} = X_b ... X_a (뒤 인덱스가 왼쪽), a > b이면 단위 행렬.
빈 합은 0.

상태 오차 x_tilde, 추정 오차 x_check = x_tilde - (x_hat - x^p), 제어 오차 u_tilde,
관측 오차 z_tilde, 신뢰 오차 b_tilde.
"""

import logging
from dataclasses import dataclass
import functools

import numpy as np

logger = logging.getLogger(__name__)


def _apply(matrix, vectors):
    """matrix @ v, vectors는 (..., n)"""
    return vectors @ matrix.T


def _memoized(method):
    """인스턴스의 _memo 딕셔너리에 결과 저장 (캐시는 인스턴스와 함께 해제)"""

    @functools.wraps(method)
    def wrapper(self, *args, **kwargs):
        key = (method.__name__, args, tuple(sorted(kwargs.items())))
        if key not in self._memo:
            self._memo[key] = method(self, *args, **kwargs)
        return self._memo[key]

    return wrapper


@dataclass(frozen=True)
class ErrorSequences:
    """
    x_tilde, x_check: (..., K+1, n_x)
    u_tilde: (..., K, n_u) (t = 0..K-1)
    z_tilde: (..., K+1, n_z) (index 0은 0)
    """

    x_tilde: np.ndarray
    x_check: np.ndarray
    u_tilde: np.ndarray
    z_tilde: np.ndarray


def recursive_errors(system, realization):
    """
    오차 동역학의 단계별 시뮬레이션

    x_tilde_{t+1} = A_t x_tilde_t + B_t u_tilde_t + G_t w_t
    z_tilde_{t+1} = H_{t+1} x_tilde_{t+1} + M_{t+1} v_{t+1}
    e_{t+1} = A_t e_t + B_t u_tilde_t + K_{t+1}(z_tilde_{t+1} - H_{t+1}(A_t e_t + B_t u_tilde_t))
    u_tilde_t = -L_t e_t, x_check_t = x_tilde_t - e_t  (e_0 = 0)
    """
    K = system.horizon
    x_tilde = np.asarray(realization.x0, dtype=float)
    estimate = np.zeros_like(x_tilde)
    batch = x_tilde.shape[:-1]
    xs, checks, us = [x_tilde], [x_tilde.copy()], []
    zs = [np.zeros(batch + (system.obs_dim,))]
    for t in range(K):
        u = -_apply(system.lqr_gains[t], estimate)
        x_tilde = _apply(system.A[t], x_tilde) + _apply(system.B[t], u) + _apply(system.G[t], realization.omega_at(t))
        z = _apply(system.H[t + 1], x_tilde) + _apply(system.M[t + 1], realization.nu_at(t + 1))
        predicted = _apply(system.A[t], estimate) + _apply(system.B[t], u)
        estimate = predicted + _apply(system.kalman_gains[t + 1], z - _apply(system.H[t + 1], predicted))
        us.append(u)
        xs.append(x_tilde)
        checks.append(x_tilde - estimate)
        zs.append(z)
    axis = len(batch)
    u_shape = batch + (0, system.control_dim)
    return ErrorSequences(np.stack(xs, axis=axis), np.stack(checks, axis=axis),
                          np.stack(us, axis=axis) if us else np.zeros(u_shape), np.stack(zs, axis=axis))


class Composites:
    """
    비재귀 전파식의 합성 행렬 (한 시스템에 대해 캐시)

    F_t = U_{t+1} A_t, D_0 = A_0, D_t = A_t - B_t L_t (t >= 1)
    """

    def __init__(self, system):
        self.system = system
        self._memo = {}
        self.n = system.state_dim
        K = system.horizon
        self.F = [system.U(t + 1) @ system.A[t] for t in range(K)]
        self.D = [system.A[0]] + [system.A[t] - system.B[t] @ system.lqr_gains[t] for t in range(1, K)]

    def _product(self, factors, a, b):
        result = np.eye(self.n)
        for index in range(a, b + 1):
            result = factors[index] @ result
        return result

    @_memoized
    def f_product(self, a, b):
        return self._product(self.F, a, b)

    @_memoized
    def d_product(self, a, b):
        return self._product(self.D, a, b)

    # 추정 오차가 제어에 미치는 항: L_r x_check_r의 계수
    @_memoized
    def f_x0(self, r):
        return self.system.lqr_gains[r] @ self.f_product(0, r - 1)

    @_memoized
    def f_omega(self, s, r):
        sys_ = self.system
        return sys_.lqr_gains[r] @ self.f_product(s + 1, r - 1) @ sys_.U(s + 1) @ sys_.G[s]

    @_memoized
    def f_nu(self, j, r):
        sys_ = self.system
        return sys_.lqr_gains[r] @ self.f_product(j, r - 1) @ sys_.kalman_gains[j] @ sys_.M[j]

    # 상태 오차 계수
    @_memoized
    def d_x0(self, t):
        total = self.d_product(0, t)
        for r in range(1, t + 1):
            total = total + self.d_product(r + 1, t) @ self.system.B[r] @ self.f_x0(r)
        return total

    @_memoized
    def d_omega(self, s, t):
        total = self.d_product(s + 1, t) @ self.system.G[s]
        for r in range(s + 1, t + 1):
            total = total + self.d_product(r + 1, t) @ self.system.B[r] @ self.f_omega(s, r)
        return total

    @_memoized
    def d_nu(self, j, t):
        total = np.zeros((self.n, self.system.M[j].shape[1]))
        for r in range(j, t + 1):
            total = total + self.d_product(r + 1, t) @ self.system.B[r] @ self.f_nu(j, r)
        return total

    # 제어 오차 계수 (u_tilde_{t1} = -L^x0 x0 - sum L^w w_s - sum L^v v_{s+1})
    @_memoized
    def l_x0(self, t1):
        return self.system.lqr_gains[t1] @ self.d_x0(t1 - 1) - self.f_x0(t1)

    @_memoized
    def l_omega(self, s, t1):
        return self.system.lqr_gains[t1] @ self.d_omega(s, t1 - 1) - self.f_omega(s, t1)

    @_memoized
    def l_nu(self, s, t1):
        return self.f_nu(s + 1, t1) - self.system.lqr_gains[t1] @ self.d_nu(s + 1, t1 - 1)

    # 관측 오차 계수
    @_memoized
    def h_x0(self, t1):
        return self.system.H[t1] @ self.d_x0(t1 - 1)

    @_memoized
    def h_omega(self, s, t1):
        return self.system.H[t1] @ self.d_omega(s, t1 - 1)

    @_memoized
    def h_nu(self, j, t1):
        if j == t1:
            return self.system.M[t1]
        return -self.system.H[t1] @ self.d_nu(j, t1 - 1)


def _check_range(t, low, high, label):
    if not low <= t <= high:
        raise IndexError(f"{label}: t={t} outside [{low}, {high}]")


def lemma1_estimation_error(system, realization, t, composites=None):
    """
    x_check_{t+1} = F_{0:t} x0 + sum_{s=0..t} F_{s+1:t}(U_{s+1} G_s w_s - K_{s+1} M_{s+1} v_{s+1})
    """
    _check_range(t, -1, system.horizon - 1, "estimation error")
    c = composites or Composites(system)
    result = _apply(c.f_product(0, t), realization.x0)
    for s in range(t + 1):
        propagate = c.f_product(s + 1, t)
        result = result + _apply(propagate @ system.U(s + 1) @ system.G[s], realization.omega_at(s))
        result = result - _apply(propagate @ system.kalman_gains[s + 1] @ system.M[s + 1], realization.nu_at(s + 1))
    return result


def lemma2_state_error(system, realization, t, composites=None):
    """
    x_tilde_{t+1} = D^x0_t x0 + sum_s D^w_{s,t} w_s - sum_s D^v_{s+1,t} v_{s+1}
    """
    _check_range(t, -1, system.horizon - 1, "state error")
    c = composites or Composites(system)
    result = _apply(c.d_x0(t), realization.x0)
    for s in range(t + 1):
        result = result + _apply(c.d_omega(s, t), realization.omega_at(s))
        result = result - _apply(c.d_nu(s + 1, t), realization.nu_at(s + 1))
    return result


def lemma3_control_error(system, realization, t, composites=None):
    """
    u_tilde_{t+1} = -L^x0_{t+1} x0 - sum_{s<=t} L^w_{s,t+1} w_s - sum_{s<=t} L^v_{s,t+1} v_{s+1}
    """
    _check_range(t, -1, system.horizon - 2, "control error")
    c = composites or Composites(system)
    result = -_apply(c.l_x0(t + 1), realization.x0)
    for s in range(t + 1):
        result = result - _apply(c.l_omega(s, t + 1), realization.omega_at(s))
        result = result - _apply(c.l_nu(s, t + 1), realization.nu_at(s + 1))
    return result


def lemma4_observation_error(system, realization, t, composites=None):
    """
    z_tilde_{t+1} = H^x0_{t+1} x0 + sum_s H^w_{s,t+1} w_s + sum_s H^v_{s+1,t+1} v_{s+1}
    """
    _check_range(t, 0, system.horizon - 1, "observation error")
    c = composites or Composites(system)
    result = _apply(c.h_x0(t + 1), realization.x0)
    for s in range(t + 1):
        result = result + _apply(c.h_omega(s, t + 1), realization.omega_at(s))
        result = result + _apply(c.h_nu(s + 1, t + 1), realization.nu_at(s + 1))
    return result


class BeliefComposites:
    """
    신뢰 오차 b_tilde_{t+1} = T^b_t b_tilde_t + T^u_t u_tilde_t + T^z_t z_tilde_{t+1} 의 비재귀 계수

    jacobians[t] = (T^b_t, T^u_t, T^z_t), t = 0..K-1
    """

    def __init__(self, system, jacobians, composites=None):
        K = system.horizon
        if len(jacobians) != K:
            raise ValueError(f"need {K} belief Jacobian triples, got {len(jacobians)}")
        belief_dim = jacobians[0][0].shape[0]
        for t, (t_b, t_u, t_z) in enumerate(jacobians):
            if (t_b.shape != (belief_dim, belief_dim) or t_u.shape != (belief_dim, system.control_dim)
                    or t_z.shape != (belief_dim, system.obs_dim)):
                raise ValueError(f"belief Jacobian shapes at t={t} do not match the system")
        self.system = system
        self.jacobians = jacobians
        self.belief_dim = belief_dim
        self.c = composites or Composites(system)
        self._memo = {}

    @_memoized
    def tb_product(self, a, b):
        result = np.eye(self.belief_dim)
        for index in range(a, b + 1):
            result = self.jacobians[index][0] @ result
        return result

    def _control_coefficient(self, kind, s, index):
        # u_tilde_s 안의 계수 (u_tilde_0 = 0)
        if s == 0:
            return None
        if kind == "x0":
            return -self.c.l_x0(s)
        if kind == "omega":
            return -self.c.l_omega(index, s) if index <= s - 1 else None
        return -self.c.l_nu(index - 1, s) if index - 1 <= s - 1 else None

    def _observation_coefficient(self, kind, s, index):
        # z_tilde_{s+1} 안의 계수
        if kind == "x0":
            return self.c.h_x0(s + 1)
        if kind == "omega":
            return self.c.h_omega(index, s + 1) if index <= s else None
        return self.c.h_nu(index, s + 1) if index <= s + 1 else None

    @_memoized
    def coefficient(self, kind, t, index=None):
        """
        b_tilde_t에서 x0 / w_index / v_index의 계수 T^x0_t, T^w_{index,t}, T^v_{index,t}
        """
        total = None
        for s in range(t):
            _, t_u, t_z = self.jacobians[s]
            propagate = self.tb_product(s + 1, t - 1)
            control = self._control_coefficient(kind, s, index)
            observation = self._observation_coefficient(kind, s, index)
            term = 0.0
            if control is not None:
                term = term + propagate @ t_u @ control
            if observation is not None:
                term = term + propagate @ t_z @ observation
            if not np.isscalar(term):
                total = term if total is None else total + term
        if total is None:
            columns = {"x0": self.system.state_dim,
                       "omega": self.system.noise.sigma_omega.shape[0],
                       "nu": self.system.noise.sigma_nu.shape[0]}[kind]
            return np.zeros((self.belief_dim, columns))
        return total


def lemma5_belief_error(system, realization, t, belief_jacobians, composites=None):
    """
    b_tilde_t = T^x0_t x0 + sum_s T^w_{s,t} w_s + sum_s T^v_{s,t} v_s  (b_tilde_0 = 0)

    Args:
        belief_jacobians: BeliefComposites 또는 (T^b, T^u, T^z) 튜플 리스트
    """
    _check_range(t, 0, system.horizon, "belief error")
    beliefs = (belief_jacobians if isinstance(belief_jacobians, BeliefComposites)
               else BeliefComposites(system, belief_jacobians, composites))
    result = _apply(beliefs.coefficient("x0", t), realization.x0)
    for s in range(t):
        result = result + _apply(beliefs.coefficient("omega", t, s), realization.omega_at(s))
        result = result + _apply(beliefs.coefficient("nu", t, s + 1), realization.nu_at(s + 1))
    return result


def recursive_belief_errors(system, realization, belief_jacobians, sequences=None):
    """
    b_tilde_{t+1} = T^b_t b_tilde_t + T^u_t u_tilde_t + T^z_t z_tilde_{t+1} 재귀 (비교 기준)

    Returns:
        (..., K+1, belief_dim) 배열
    """
    sequences = sequences or recursive_errors(system, realization)
    batch = np.asarray(realization.x0).shape[:-1]
    belief_dim = belief_jacobians[0][0].shape[0]
    belief = np.zeros(batch + (belief_dim,))
    beliefs = [belief]
    for t, (t_b, t_u, t_z) in enumerate(belief_jacobians):
        belief = (_apply(t_b, belief) + _apply(t_u, sequences.u_tilde[..., t, :])
                  + _apply(t_z, sequences.z_tilde[..., t + 1, :]))
        beliefs.append(belief)
    return np.stack(beliefs, axis=len(batch))
