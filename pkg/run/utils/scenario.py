"""
시나리오(JSON) 로드, 스키마 검증, 계획 문제 구성
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
from jsonschema import Draft7Validator

from run.belief.gaussian_belief import CostWeights
from run.config import DEFAULT_SEED, OBF_SAMPLES_PER_AXIS, SCENARIO_SCHEMA_FILE
from run.execution.executor import ExecutionConfig
from run.models.model_types import LandmarkMap, NoiseSpec
from run.models.motion_models import linear_motion, youbot_motion
from run.models.observation_models import LANDMARK_KINDS, linear_observation, make_observation_model
from run.obstacles.barrier import ObstacleSet
from run.planning.problem import PlanningProblem, SolverOptions
from run.planning.solver import straight_line_seed, waypoint_seed
from run.utils.errors import ConfigurationError, ScenarioError

logger = logging.getLogger(__name__)

_validator = None


@dataclass(frozen=True)
class Scenario:
    """검증된 시나리오에서 만든 계획 문제와 실행 설정"""

    name: str
    problem: PlanningProblem
    solver_options: SolverOptions
    exec_config: ExecutionConfig
    landmarks: LandmarkMap = field(default_factory=LandmarkMap)
    polygons: List[np.ndarray] = field(default_factory=list)
    waypoint_sets: List[np.ndarray] = field(default_factory=list)
    seed: int = DEFAULT_SEED
    raw: Optional[dict] = field(default=None, repr=False)

    def seed_controls(self):
        """직선 초기 궤적 + 경유점 초기 궤적들"""
        seeds = [straight_line_seed(self.problem)]
        seeds.extend(waypoint_seed(self.problem, waypoints) for waypoints in self.waypoint_sets)
        return seeds


def _schema_validator():
    global _validator
    if _validator is None:
        with open(SCENARIO_SCHEMA_FILE, 'r', encoding='utf-8') as f:
            schema = json.load(f)
        Draft7Validator.check_schema(schema)
        _validator = Draft7Validator(schema)
    return _validator


def _field_path(path):
    return "/".join(str(part) for part in path) or "<root>"


def validate_scenario(document):
    """
    스키마 검증 (첫 번째 오류를 field path와 함께 ScenarioError로 변환)
    """
    errors = sorted(_schema_validator().iter_errors(document),
                    key=lambda e: [str(part) for part in e.absolute_path])
    for error in errors:
        logger.error(f"schema violation at {_field_path(error.absolute_path)}: {error.message}")
    if errors:
        raise ScenarioError(errors[0].message, _field_path(errors[0].absolute_path))


def load_scenario_document(path):
    """
    시나리오 파일 읽기 + 스키마 검증

    Returns:
        검증된 dict
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            document = json.load(f)
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}")
    except json.JSONDecodeError as e:
        raise ScenarioError(f"invalid JSON ({e.msg}) at line {e.lineno}, column {e.colno}")
    validate_scenario(document)
    return document


def _matrix(value, dim, field_path):
    """스칼라 -> 스칼라 * I, 중첩 리스트 -> (dim, dim) 행렬"""
    array = np.asarray(value, dtype=float)
    if array.ndim == 0:
        return float(array) * np.eye(dim)
    if array.shape != (dim, dim):
        raise ScenarioError(f"expected a scalar or a {dim}x{dim} matrix, got shape {array.shape}", field_path)
    return array


def _vector(value, dim, field_path):
    array = np.asarray(value, dtype=float)
    if array.shape != (dim,):
        raise ScenarioError(f"expected {dim} entries, got {array.size}", field_path)
    return array


def _build_motion(section):
    kind = section["kind"]
    if kind == "youbot":
        params = {key: section[key] for key in ("wheel_radius", "half_length", "half_width", "dt") if key in section}
        return youbot_motion(**params)
    return linear_motion(section["A"], section["B"], section["G"], section.get("position_dims"))


def _build_observation(section, landmarks, motion):
    kind = section["kind"]
    if kind == "linear":
        model = linear_observation(section["H"], section["M"])
        if model.jacobians(np.zeros(motion.state_dim))[0].shape[1] != motion.state_dim:
            raise ScenarioError(f"H must have {motion.state_dim} columns", "observation/H")
        return model
    if kind in LANDMARK_KINDS and len(landmarks) == 0:
        raise ScenarioError(f"{kind} sensor needs at least one landmark", "landmarks")
    return make_observation_model(kind, landmarks, section.get("params"), motion.state_dim, motion.position_dims)


def _build_obstacles(section):
    if not section or not section.get("polygons"):
        return None, []
    polygons = [np.asarray(polygon, dtype=float) for polygon in section["polygons"]]
    for index, polygon in enumerate(polygons):
        if polygon.ndim != 2 or polygon.shape[1] != 2 or polygon.shape[0] < 3:
            raise ScenarioError("a polygon needs at least 3 planar vertices", f"obstacles/polygons/{index}")
    constants = {key: section[key] for key in ("m1", "m2", "q", "riemann_points") if key in section}
    constants["eps_m"] = 1.0 / section.get("samples_per_axis", OBF_SAMPLES_PER_AXIS)
    return ObstacleSet.from_polygons(polygons, section.get("inflation_radius", 0.0), **constants), polygons


def build_scenario(document, name="scenario"):
    """
    검증된 시나리오 dict에서 계획 문제와 실행 설정 구성

    Args:
        document: load_scenario_document 결과
        name: 시나리오 이름 (문서에 name이 없을 때)

    Returns:
        Scenario
    """
    try:
        motion = _build_motion(document["motion"])
        n, m = motion.state_dim, motion.control_dim
        landmarks = LandmarkMap(tuple(tuple(p) for p in document.get("landmarks", [])))
        obs = _build_observation(document["observation"], landmarks, motion)

        noise_spec = document["noise"]
        noise = NoiseSpec(_matrix(noise_spec["sigma_omega"], motion.noise_dim, "noise/sigma_omega"),
                          _matrix(noise_spec["sigma_nu"], obs.noise_dim, "noise/sigma_nu"))

        belief = document["initial_belief"]
        x0 = _vector(belief["mean"], n, "initial_belief/mean")
        p0 = _matrix(belief["covariance"], n, "initial_belief/covariance")
        goal = _vector(document["goal"]["state"], n, "goal/state")

        horizon = document["horizon"]
        weights_spec = document["weights"]
        weights = CostWeights.uniform(_matrix(weights_spec["state"], n, "weights/state"),
                                      _matrix(weights_spec["control"], m, "weights/control"),
                                      horizon, n, m)

        obstacle_spec = document.get("obstacles", {})
        obstacles, polygons = _build_obstacles(obstacle_spec)
        body = document.get("body_points")
        if body is not None and np.asarray(body).shape[1:] != (motion.position_dims,):
            raise ScenarioError(f"body points need {motion.position_dims} coordinates", "body_points")

        problem = PlanningProblem(
            motion=motion, obs=obs, noise=noise, x0_mean=x0, p0=p0, weights=weights, goal=goal,
            goal_radius=document["goal"]["radius"], control_radius=document["control_radius"],
            horizon=horizon, obstacles=obstacles,
            obstacle_weight=obstacle_spec.get("weight", 1.0) if obstacles else 1.0,
            body_points=None if body is None else np.asarray(body, dtype=float))

        seed = document.get("seed", DEFAULT_SEED)
        solver_options = SolverOptions(**document.get("solver", {}))
        exec_config = ExecutionConfig(seed=seed, **document.get("execution", {}))
        waypoint_sets = [np.asarray(w, dtype=float) for w in document.get("seeds", {}).get("waypoints", [])]
    except ScenarioError:
        raise
    except (ConfigurationError, ValueError) as e:
        raise ScenarioError(str(e))

    scenario = Scenario(name=document.get("name", name), problem=problem, solver_options=solver_options,
                        exec_config=exec_config, landmarks=landmarks, polygons=polygons,
                        waypoint_sets=waypoint_sets, seed=seed, raw=document)
    logger.info(f"scenario '{scenario.name}': motion={motion.name}, observation={obs.name}, K={horizon}, "
                f"obstacles={len(obstacles) if obstacles else 0}, seeds={1 + len(waypoint_sets)}")
    return scenario


def load_scenario(path):
    """시나리오 파일 -> Scenario"""
    document = load_scenario_document(path)
    return build_scenario(document, name=Path(path).stem)
