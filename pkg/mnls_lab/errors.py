"""
예외 정의 - mnls_lab 전체에서 사용하는 오류 계층

모든 오류는 LabError를 상속합니다. 값 검증 계열 오류는 ValueError도 함께
상속하므로 호출하는 쪽에서 어느 쪽으로든 잡을 수 있습니다.

사용 예시:
    from mnls_lab.errors import LabError, ResampleError

    try:
        W = resample_scaled(U, 0.1, 0.5)
    except ResampleError as e:
        print(f"경계 질량 초과: {e.tail_mass:.2e}")
"""

from __future__ import annotations

from typing import Any


class LabError(Exception):
    """mnls_lab 기본 예외"""


class GridError(LabError, ValueError):
    """격자 정의 오류 또는 격자 불일치"""


class SampleError(LabError, ValueError):
    """샘플링 값이 유한하지 않음"""

    def __init__(self, message: str, index: tuple[int, ...] | None = None):
        super().__init__(message)
        self.index = index


class ResampleError(LabError, ValueError):
    """스케일 재샘플링 실패 (경계 질량 초과 등)"""

    def __init__(self, message: str, tail_mass: float | None = None):
        super().__init__(message)
        self.tail_mass = tail_mass


class ParameterError(LabError, ValueError):
    """모델 파라미터 오류"""


class RegimeError(LabError, ValueError):
    """연산이 요구하는 영역(아임계/임계/초임계)과 p가 맞지 않음"""


class FunctionalError(LabError, ArithmeticError):
    """범함수 계산 중 유한하지 않은 값 발생"""

    def __init__(self, message: str, functional: str = ""):
        super().__init__(message)
        self.functional = functional


class LambdaStarError(LabError, ValueError):
    """λ*(W) 최댓값을 찾을 수 없음"""


class ConvergenceError(LabError, RuntimeError):
    """반복 한도 안에 수렴하지 못함 (부분 결과 포함)"""

    def __init__(self, message: str, result: Any = None):
        super().__init__(message)
        self.result = result


class FlowDivergenceError(LabError, RuntimeError):
    """경사 흐름 발산 또는 영(0) 필드로 붕괴"""


class NotABoundStateError(LabError, ValueError):
    """속박 상태로 스케일 변환할 수 없음"""


class VirialError(LabError, ValueError):
    """Virial 잔차 계산 조건 위반"""


class OrbitalError(LabError, ValueError):
    """궤도 거리 계산 불가"""


class ConfigError(LabError, ValueError):
    """설정 파일 오류"""
