"""
T-LQG 신뢰 공간(belief space) 경로 계획 실험에 필요한 설정 파라미터
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# 기본 경로 설정
BASE_DIR = Path(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
RESULTS_DIR = BASE_DIR / "results"
RESOURCES_DIR = BASE_DIR / "run" / "resources"

# .env 파일이 있으면 환경 변수로 로드
load_dotenv(BASE_DIR / ".env")

# 시나리오 설정
SCENARIO_SCHEMA_FILE = RESOURCES_DIR / "scenario_schema.json"
SCENARIOS_DIR = RESOURCES_DIR / "scenarios"

# 로깅 설정 (TLQG_LOG=DEBUG|INFO|WARNING|ERROR)
LOG_LEVEL = os.environ.get("TLQG_LOG", "INFO").upper()
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_FILE_NAME = "run.log"

# youBot 베이스 기하 (메카넘 휠 4개)
YOUBOT_WHEEL_RADIUS = 0.05  # m
YOUBOT_HALF_LENGTH = 0.235  # m, l1
YOUBOT_HALF_WIDTH = 0.15  # m, l2
YOUBOT_DT = 1.0  # s

# light-dark 관측 모델 상수
LIGHT_DARK_QUADRATIC = {"a": 0.1, "b": 0.01, "light": 3.0}
LIGHT_DARK_HYPERBOLIC = {"a": 1.0, "b": 0.01, "c": 1.0}

# 장애물 barrier 함수 기본값
OBF_M1 = 10.0
OBF_M2 = 0.1
OBF_Q = 2
OBF_SAMPLES_PER_AXIS = 10  # eps_m = 1/m
OBF_RIEMANN_POINTS = 5
OBF_SINGULAR_RADIUS = 1e-9
OBF_SINGULAR_VALUE = 1e18

# MVEE (Khachiyan) 설정
MVEE_TOLERANCE = 1e-7
MVEE_MAX_ITERATIONS = 10000
MVEE_REGULARIZATION = 1e-6

# 수치 안정화 설정
REGULARIZATION_FLOOR = 1e-12
CONDITION_LIMIT = 1e12
KL_COVARIANCE_FLOOR = 1e-9

# 최적화(solver) 기본값
SOLVER_MAX_ITERATIONS = 200  # 외부 라운드마다 내부 BFGS 반복 수
SOLVER_GRADIENT_STEP = 1e-6
SOLVER_PENALTY_INITIAL = 1.0
SOLVER_PENALTY_GROWTH = 10.0
SOLVER_OUTER_ROUNDS = 6
SOLVER_CONVERGENCE_TOL = 1e-4
SOLVER_ARMIJO = 1e-4
SOLVER_BACKTRACK = 0.5
SOLVER_MAX_BACKTRACKS = 40
SOLVER_EXACT_PENALTY = 1e4
SOLVER_FEASIBILITY_TOL = 1e-4
OBSTACLE_WEIGHT = 1.0

# 실행(execution) 기본값
REPLAN_THRESHOLD = 2.0  # d_th
GOAL_PROBABILITY = 0.9  # p_g
STEP_BUDGET_FACTOR = 10  # step budget = factor * K
GOAL_SAMPLES = 10000
MAX_PLANNER_FAILURES = 3
DEFAULT_SEED = 0
PLANNING_GOAL_MARGIN = 0.5  # 실행 중 계획은 r_g * margin 반경을 목표로 함
BATCH_WORKERS = int(os.environ.get("TLQG_WORKERS", "1"))

# 출력 설정
FLOAT_FORMAT = "%.17g"

# 검증(validation) 설정
VALIDATION_SYSTEMS = 100
VALIDATION_REALIZATIONS = 100
VALIDATION_HORIZON = 5
VALIDATION_SAMPLES = 100000
LEMMA_TOLERANCE = 1e-10
BELIEF_LEMMA_TOLERANCE = 1e-8
BELIEF_JACOBIAN_STEP = 1e-6
THEOREM_SIGMA_BOUND = 4.0

# 종료 코드
EXIT_OK = 0
EXIT_VALIDATION_FAILURE = 1
EXIT_INPUT_ERROR = 2
EXIT_SOLVER_FAILURE = 3
