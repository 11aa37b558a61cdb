import json
import os

import hypothesis
import numpy as np
import pytest

from run.belief.gaussian_belief import CostWeights
from run.models.model_types import LandmarkMap, NoiseSpec
from run.models.motion_models import linear_motion, youbot_motion
from run.models.observation_models import linear_observation, make_observation_model
from run.planning.problem import PlanningProblem, SolverOptions

np.seterr(all="warn")

hypothesis.settings.register_profile("fast", max_examples=15, deadline=None)
hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "fast"))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def scalar_lti():
    """x' = x + u + w, z = x + v"""
    motion = linear_motion([[1.0]], [[1.0]], [[1.0]], position_dims=1)
    obs = linear_observation([[1.0]], [[1.0]])
    return motion, obs


def make_scalar_problem(x0=0.0, goal=1.0, horizon=4, sigma_w=0.01, sigma_v=0.01, p0=0.1,
                        w_x=1.0, w_u=0.1, goal_radius=0.05, control_radius=5.0):
    motion = linear_motion([[1.0]], [[1.0]], [[1.0]], position_dims=1)
    obs = linear_observation([[1.0]], [[1.0]])
    return PlanningProblem(
        motion=motion, obs=obs, noise=NoiseSpec([[sigma_w]], [[sigma_v]]),
        x0_mean=[x0], p0=[[p0]], weights=CostWeights.uniform(w_x, w_u, horizon, 1, 1),
        goal=[goal], goal_radius=goal_radius, control_radius=control_radius, horizon=horizon)


def make_youbot_problem(landmarks=((0.5, 2.0),), goal=(2.0, 2.0, 2.0), horizon=10, sigma_w=1e-4,
                        sigma_v=1e-3, p0=0.01, goal_radius=0.1, obstacles=None, kind="range_bearing"):
    motion = youbot_motion()
    obs = make_observation_model(kind, LandmarkMap(tuple(landmarks)), state_dim=3)
    return PlanningProblem(
        motion=motion, obs=obs, noise=NoiseSpec(sigma_w * np.eye(3), sigma_v * np.eye(obs.noise_dim)),
        x0_mean=np.zeros(3), p0=p0 * np.eye(3), weights=CostWeights.uniform(1.0, 1e-3, horizon, 3, 4),
        goal=np.asarray(goal, dtype=float), goal_radius=goal_radius, control_radius=30.0, horizon=horizon,
        obstacles=obstacles)


@pytest.fixture
def scalar_problem():
    return make_scalar_problem()


@pytest.fixture
def youbot_problem():
    return make_youbot_problem()


@pytest.fixture
def quick_options():
    return SolverOptions(max_iterations=60, outer_rounds=4)


SCALAR_SCENARIO = {
    "name": "scalar",
    "motion": {"kind": "linear", "A": [[1.0]], "B": [[1.0]], "G": [[1.0]], "position_dims": 1},
    "observation": {"kind": "linear", "H": [[1.0]], "M": [[1.0]]},
    "noise": {"sigma_omega": 0.01, "sigma_nu": 0.01},
    "initial_belief": {"mean": [0.0], "covariance": 0.1},
    "goal": {"state": [1.0], "radius": 0.05},
    "horizon": 4,
    "weights": {"state": 1.0, "control": 0.1},
    "control_radius": 5.0,
    "solver": {"max_iterations": 60, "outer_rounds": 4},
    "execution": {"goal_samples": 500, "step_budget": 8},
    "seed": 3,
}


def write_scenario(directory, document, name="scenario.json"):
    path = directory / name
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


@pytest.fixture
def scalar_scenario_path(tmp_path):
    return write_scenario(tmp_path, SCALAR_SCENARIO, "scalar.json")
