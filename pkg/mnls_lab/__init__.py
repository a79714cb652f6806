"""
mnls_lab - 결합 비선형 슈뢰딩거 방정식 (M-NLS) 수치 실험실

주요 기능:
    - field_core: 주기 격자, 스펙트럼 미분, 스케일 재표본화
    - functionals: 범함수 M, T, J, I, E, H, S 와 GN 상수, 결합 구조
    - groundstate: 제약 경사 흐름 / Nehari 흐름 기저 상태
    - dynamics: Strang 분할 시간 전개와 폭발 판정
    - diagnostics: 분산, Virial, 궤도 거리
    - experiments: 안정성/폭발/항등식 실험과 스윕

사용 예시:
    from mnls_lab import ModelParams, FlowConfig, ground_state

    params = ModelParams(p=1.0, coupling=[[1.0, 1.0], [1.0, 1.0]])
    result = ground_state(params, FlowConfig())
    print(result.report.to_json())
"""

from .diagnostics import OrbitalAlignment, orbital_distance, variance, virial_residual
from .dynamics import EvolutionTrace, StepperConfig, evolve
from .errors import LabError
from .experiments import (
    ExperimentKind,
    ExperimentOutcome,
    ExperimentSpec,
    Status,
    run_experiment,
    run_sweep,
)
from .field_core import ComponentField, FieldVec, GridSpec
from .functionals import FunctionalReport, ModelParams, Regime, report
from .groundstate import (
    FlowConfig,
    GroundStateResult,
    PerComponentMass,
    TotalMass,
    ground_state,
    minimize,
)

__version__ = "0.1.0"
