"""
T-LQG 파이프라인 전반에서 사용하는 예외 클래스
"""


class TlqgError(Exception):
    """모든 T-LQG 예외의 기본 클래스"""


class ConfigurationError(TlqgError):
    """잘못된 모델 종류, 음수 dt 등 설정 오류"""


class ScenarioError(ConfigurationError):
    """시나리오 스키마 또는 필드 간 정합성 오류"""

    def __init__(self, message, field_path=None):
        self.field_path = field_path
        if field_path:
            message = f"{field_path}: {message}"
        super().__init__(message)


class EvaluationError(TlqgError):
    """모델 평가 결과가 유한하지 않은 경우"""


class SingularPointError(EvaluationError):
    """bearing 관측에서 랜드마크와 위치가 일치하는 특이점"""


class NumericalError(TlqgError):
    """역행렬 계산 불가 등 수치 오류"""

    def __init__(self, message, condition=None, time_index=None):
        self.condition = condition
        self.time_index = time_index
        details = []
        if time_index is not None:
            details.append(f"t={time_index}")
        if condition is not None:
            details.append(f"cond={condition:.3e}")
        if details:
            message = f"{message} ({', '.join(details)})"
        super().__init__(message)


class RolloutError(NumericalError):
    """공칭 궤적 전개 중 유한하지 않은 상태 발생"""


class GradientError(NumericalError):
    """유한 차분 gradient 계산 중 유한하지 않은 비용 발생"""

    def __init__(self, message, coordinate=None):
        self.coordinate = coordinate
        if coordinate is not None:
            message = f"{message} (coordinate {coordinate})"
        super().__init__(message)


class PlanningInputError(TlqgError):
    """초기 제어열(seed)의 비용이 유한하지 않은 경우"""
