"""
계획/실행 결과의 정적 SVG 그림 (matplotlib Agg 백엔드)
"""

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Ellipse, Polygon  # noqa: E402

from run.utils.file_utils import ensure_directory  # noqa: E402

logger = logging.getLogger(__name__)

# 같은 입력이면 같은 SVG
matplotlib.rcParams["svg.hashsalt"] = "tlqg"


def covariance_ellipse(mean, covariance, n_sigma=2.0, **kwargs):
    """
    2차원 공분산의 n_sigma 등확률 타원 패치

    Args:
        mean: 중심 (앞쪽 2개 좌표 사용)
        covariance: 공분산 (앞쪽 2x2 블록 사용)
        n_sigma: 표준편차 배수
    """
    block = np.asarray(covariance, dtype=float)[:2, :2]
    eigenvalues, eigenvectors = np.linalg.eigh(0.5 * (block + block.T))
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    angle = np.degrees(np.arctan2(eigenvectors[1, 1], eigenvectors[0, 1]))
    width, height = 2.0 * n_sigma * np.sqrt(eigenvalues[::-1])
    return Ellipse(xy=np.asarray(mean, dtype=float)[:2], width=width, height=height, angle=angle, **kwargs)


def ellipsoid_patch(ellipsoid, **kwargs):
    """(x - c)^T E (x - c) <= 1 의 경계 패치"""
    eigenvalues, eigenvectors = np.linalg.eigh(ellipsoid.shape)
    semi_axes = 1.0 / np.sqrt(eigenvalues)
    angle = np.degrees(np.arctan2(eigenvectors[1, 0], eigenvectors[0, 0]))
    return Ellipse(xy=ellipsoid.center, width=2.0 * semi_axes[0], height=2.0 * semi_axes[1],
                   angle=angle, **kwargs)


def _draw_environment(ax, scenario):
    problem = scenario.problem
    if len(scenario.landmarks):
        positions = scenario.landmarks.positions
        ax.scatter(positions[:, 0], positions[:, 1], marker="*", s=120, color="tab:orange", label="landmarks")
    for polygon in scenario.polygons:
        ax.add_patch(Polygon(polygon, closed=True, color="dimgray", alpha=0.8))
    if problem.obstacles is not None:
        for ellipsoid in problem.obstacles.ellipsoids:
            ax.add_patch(ellipsoid_patch(ellipsoid, fill=False, linestyle="--", color="black"))
    ax.add_patch(plt.Circle(problem.goal[:2], problem.goal_radius, color="tab:green", alpha=0.3))
    ax.scatter(*problem.x0_mean[:2], marker="o", color="black", zorder=5)


def _save(fig, ax, path):
    ax.set_aspect("equal", adjustable="datalim")
    ax.grid(True, alpha=0.3)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.legend(loc="best", fontsize="small")
    ensure_directory(Path(path).resolve().parent)
    fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"그림 저장됨: {path}")


def plot_plan(path, scenario, result, covariances):
    """
    초기 궤적, 최적 o-traj, 2-sigma 공분산 타원, 랜드마크, 장애물

    Args:
        path: SVG 경로
        scenario: Scenario
        result: PlanResult
        covariances: o-traj 각 시점의 공분산 (t = 0..K)
    """
    fig, ax = plt.subplots(figsize=(6, 6))
    _draw_environment(ax, scenario)
    if result.seed_trajectory is not None:
        seed = result.seed_trajectory.states
        ax.plot(seed[:, 0], seed[:, 1], "--", color="tab:green", label="initial trajectory")
    states = result.trajectory.states
    ax.plot(states[:, 0], states[:, 1], "-o", markersize=3, color="goldenrod", label="optimized trajectory")
    for state, covariance in zip(states, covariances):
        ax.add_patch(covariance_ellipse(state, covariance, fill=False, color="tab:blue", linewidth=0.8))
    ax.set_title(f"{scenario.name}: cost={result.cost:.4g}")
    _save(fig, ax, path)


def plot_execution(path, scenario, trace):
    """
    실행 결과: 계획된 o-traj들, 실제 경로, 추정 경로
    """
    fig, ax = plt.subplots(figsize=(6, 6))
    _draw_environment(ax, scenario)
    for index, nominal in enumerate(trace.nominal_paths):
        ax.plot(nominal[:, 0], nominal[:, 1], ":", color="goldenrod",
                label="planned trajectories" if index == 0 else None)
    if trace.records:
        true_path = np.vstack([trace.initial_state[None, :]] + [r.true_state[None, :] for r in trace.records])
        estimates = np.vstack([scenario.problem.x0_mean[None, :]] + [r.estimate[None, :] for r in trace.records])
        ax.plot(true_path[:, 0], true_path[:, 1], "-", color="tab:red", label="true path")
        ax.plot(estimates[:, 0], estimates[:, 1], "--", color="tab:blue", label="estimated path")
    ax.set_title(f"{scenario.name}: seed={trace.seed}, {trace.status}, replans={trace.replans}")
    _save(fig, ax, path)
