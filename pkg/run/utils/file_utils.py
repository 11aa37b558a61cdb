"""
파일 처리를 위한 유틸리티 함수들

계획/실행 결과는 '# key: value' 메타데이터 머리말 + 헤더가 있는 CSV 행으로 저장한다.
실수는 %.17g로 기록하므로 다시 읽으면 같은 값이 복원된다.
"""

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from run.config import FLOAT_FORMAT
from run.planning.trajectory import NominalTrajectory

logger = logging.getLogger(__name__)


def ensure_directory(path):
    """
    디렉토리가 없으면 생성

    Returns:
        Path 객체
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def read_file(file_path):
    """
    파일 내용 읽기

    Args:
        file_path: 파일 경로

    Returns:
        파일 내용 문자열
    """
    with open(file_path, 'r', encoding='utf-8') as f:
        return f.read()


def write_file(file_path, content):
    """
    파일에 내용 쓰기 (디렉토리가 없으면 생성)
    """
    ensure_directory(Path(file_path).resolve().parent)
    with open(file_path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(content)


def write_json(file_path, data):
    ensure_directory(Path(file_path).resolve().parent)
    with open(file_path, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2, ensure_ascii=False)


def _format_value(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    if isinstance(value, (list, tuple, np.ndarray)):
        return ",".join(_format_value(v) for v in value)
    return str(value)


def write_table(file_path, frame, metadata=None):
    """
    메타데이터 머리말과 함께 DataFrame을 CSV로 저장

    Args:
        file_path: 출력 경로
        frame: pandas DataFrame
        metadata: {key: value} (value가 행 리스트인 'ellipsoid' 같은 키는 행마다 한 줄)
    """
    lines = []
    for key, value in (metadata or {}).items():
        if isinstance(value, list) and value and isinstance(value[0], (list, tuple, np.ndarray)):
            lines.extend(f"# {key}: {_format_value(row)}" for row in value)
        else:
            lines.append(f"# {key}: {_format_value(value)}")
    body = frame.to_csv(index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")
    write_file(file_path, "\n".join(lines) + ("\n" if lines else "") + body)
    logger.info(f"테이블 저장됨: {file_path} ({len(frame)} rows)")


def read_table(file_path):
    """
    write_table로 저장한 파일 읽기

    Returns:
        (DataFrame, metadata 딕셔너리 - 반복된 키는 리스트)
    """
    metadata = {}
    with open(file_path, 'r', encoding='utf-8') as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].partition(":")
            key, value = key.strip(), value.strip()
            if key in metadata:
                if not isinstance(metadata[key], list):
                    metadata[key] = [metadata[key]]
                metadata[key].append(value)
            else:
                metadata[key] = value
    frame = pd.read_csv(file_path, comment="#", float_precision="round_trip")
    return frame, metadata


def _columns(prefix, count):
    return [f"{prefix}{i}" for i in range(count)]


def plan_frame(result, covariance_traces):
    """
    계획 결과를 t = 0..K 행으로 변환 (o-traj 상태/제어, 초기 궤적 상태, tr(P+_t))
    """
    trajectory = result.trajectory
    K = trajectory.horizon
    n = trajectory.states.shape[1]
    m = trajectory.controls.shape[1]
    frame = pd.DataFrame({"t": np.arange(K + 1)})
    frame[_columns("x", n)] = trajectory.states
    controls = np.full((K + 1, m), np.nan)
    controls[:K] = trajectory.controls
    frame[_columns("u", m)] = controls
    if result.seed_trajectory is not None:
        frame[_columns("seed_x", n)] = result.seed_trajectory.states
    traces = np.full(K + 1, np.nan)
    traces[1:] = covariance_traces
    frame["trace_p"] = traces
    return frame


def write_plan(file_path, result, metadata=None):
    breakdown = result.breakdown
    info = {
        "cost": result.cost,
        "estimation_cost": breakdown.estimation if breakdown else float("nan"),
        "control_cost": breakdown.control if breakdown else float("nan"),
        "obstacle_cost": breakdown.obstacle if breakdown else float("nan"),
        "constraint_violation": result.constraint_violation,
        "iterations": result.iterations,
        "converged": result.converged,
        "merit_history": list(result.merit_history),
    }
    if result.candidate_costs:
        info["candidate_costs"] = list(result.candidate_costs)
    info.update(metadata or {})
    write_table(file_path, plan_frame(result, breakdown.covariance_traces if breakdown else ()), info)


def read_plan(file_path):
    """
    계획 파일에서 o-traj 복원

    Returns:
        (NominalTrajectory, metadata)
    """
    frame, metadata = read_table(file_path)
    state_columns = [c for c in frame.columns if c.startswith("x")]
    control_columns = [c for c in frame.columns if c.startswith("u")]
    states = frame[state_columns].to_numpy(dtype=float)
    controls = frame[control_columns].to_numpy(dtype=float)[:-1]
    return NominalTrajectory(states, controls), metadata


def trace_frame(trace):
    """ExecutionTrace를 스텝별 행으로 변환"""
    rows = []
    for record in trace.records:
        row = {"step": record.step, "t": record.t}
        row.update({f"true_x{i}": v for i, v in enumerate(record.true_state)})
        row.update({f"est_x{i}": v for i, v in enumerate(record.estimate)})
        row["cov_trace"] = record.covariance_trace
        row.update({f"u{i}": v for i, v in enumerate(record.control)})
        row.update({f"z{i}": v for i, v in enumerate(record.observation)})
        row["kl_distance"] = record.kl_distance
        row["replanned"] = int(record.replanned)
        row["planner_warning"] = int(record.planner_warning)
        rows.append(row)
    return pd.DataFrame(rows, columns=list(rows[0]) if rows else ["step", "t"])


def write_trace(file_path, trace, metadata=None):
    info = {"status": trace.status, "seed": trace.seed, "steps": trace.steps, "replans": trace.replans,
            "goal_probability": trace.goal_probability}
    info.update(metadata or {})
    write_table(file_path, trace_frame(trace), info)
