"""
시드별 실행 결과(ExecutionTrace) 요약 평가 모듈
"""

import logging
from pathlib import Path

import numpy as np

from run.config import RESULTS_DIR
from run.utils.file_utils import write_json

logger = logging.getLogger(__name__)


def summarize_traces(traces):
    """
    배치 실행 요약

    Args:
        traces: ExecutionTrace 리스트

    Returns:
        runs, reached, reach_rate, aborted, mean_replans, mean_steps를 담은 딕셔너리
    """
    runs = len(traces)
    if runs == 0:
        return {'runs': 0, 'reached': 0, 'reach_rate': 0.0, 'aborted': 0,
                'mean_replans': 0.0, 'mean_steps': 0.0}
    reached = sum(1 for trace in traces if trace.reached_goal)
    return {
        'runs': runs,
        'reached': reached,
        'reach_rate': reached / runs,
        'aborted': sum(1 for trace in traces if trace.status == "aborted"),
        'mean_replans': float(np.mean([trace.replans for trace in traces])),
        'mean_steps': float(np.mean([trace.steps for trace in traces])),
    }


class ExecutionEvaluator:
    """배치 실행 결과를 요약하고 저장하는 클래스"""

    def __init__(self, results_dir=RESULTS_DIR):
        """
        초기화

        Args:
            results_dir: 결과 저장 디렉토리
        """
        self.results_dir = Path(results_dir)

    def evaluate_batch(self, traces, required_rate=None):
        """
        배치 요약 계산 및 batch_summary.json 저장

        Args:
            traces: ExecutionTrace 리스트
            required_rate: 요구 도달률 (주어지면 'passed' 항목 추가)

        Returns:
            요약 딕셔너리
        """
        summary = summarize_traces(traces)
        summary['seeds'] = [int(trace.seed) for trace in traces]
        summary['statuses'] = [trace.status for trace in traces]
        if required_rate is not None:
            summary['passed'] = summary['reach_rate'] >= required_rate

        logger.info(f"Batch summary: {summary['reached']}/{summary['runs']} reached goal "
                    f"(rate={summary['reach_rate']:.2f}), mean replans={summary['mean_replans']:.2f}")
        self._save_summary(summary)
        return summary

    def _save_summary(self, summary):
        try:
            summary_file = self.results_dir / "batch_summary.json"
            write_json(summary_file, summary)
            logger.info(f"배치 요약 저장됨: {summary_file}")
        except Exception as e:
            logger.error(f"배치 요약 저장 오류: {e}", exc_info=True)
