"""
Experiments - 안정성/불안정성 이분법을 재현하는 탁상 규모 실험

주요 기능:
    - run_stability: 아임계 기저 상태(족)의 궤도 안정성
    - run_percomponent_stability: 성분별 질량 고정 상태 B^c 와 부분계 X 의 안정성
    - run_supercritical_blowup: 확대 P(Q, λ) 의 폭발 (R 변형 포함)
    - run_critical_blowup: 진폭 λQ 의 폭발 (p = 2/N)
    - run_identity_suite / run_gn_suite: 범함수 항등식과 GN 부등식 점검
    - weak_instability_demo: H < 0 근방과 H(W) ≤ S(W) − S(U) 메커니즘 (판정 없음)
    - run_sweep: asyncio + 프로세스 풀로 여러 실험 동시 실행

사용 예시:
    from mnls_lab.experiments import ExperimentKind, ExperimentSpec, run_experiment

    spec = ExperimentSpec(kind=ExperimentKind.STABILITY, params=ModelParams.scalar(1.0))
    outcome = run_experiment(spec)
    outcome.save("runs/stability")
    print(outcome.status, outcome.measured["sup_distance"])
"""

from __future__ import annotations

import asyncio
import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .diagnostics import (
    family_monitor,
    h1_norm,
    orbital_distance,
    orbital_monitor,
    rotation_family,
    variance_second_difference,
    virial_residual,
)
from .dynamics import EvolutionTrace, StepperConfig, evolve
from .errors import LabError, ParameterError, RegimeError
from .field_core import (
    FieldVec,
    GridSpec,
    random_smooth_field,
    save_snapshot,
)
from .functionals import (
    ModelParams,
    Regime,
    action_slope,
    critical_identity_residual,
    dilation,
    gn_constant,
    gn_equality_rescale,
    gn_quotient,
    lambda_star,
    r_coefficients,
    report,
    sigma_scaling,
    weinstein_bound,
)
from .groundstate import (
    FlowConfig,
    Initializer,
    ground_state,
    scalar_ground_state,
)

logger = logging.getLogger(__name__)


# =============================================================================
# 상수 정의
# =============================================================================

class ExperimentKind(str, Enum):
    STABILITY = "stability"
    PER_COMPONENT_STABILITY = "per_component_stability"
    SUPERCRITICAL_BLOWUP = "supercritical_blowup"
    CRITICAL_BLOWUP = "critical_blowup"
    IDENTITY_SUITE = "identity_suite"
    GN_SUITE = "gn_suite"


class Status(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"

    @property
    def exit_code(self) -> int:
        return {Status.PASS: 0, Status.FAIL: 1, Status.INCONCLUSIVE: 2}[self]


# 판정 기준 기본값 (실험 종류 공통 이름 공간)
DEFAULT_THRESHOLDS: dict[str, float] = {
    "distance_factor": 5.0,       # sup d ≤ factor·ε
    "zero_floor": 1e-5,           # ε = 0 일 때 궤도 표류 허용치
    "mass_growth": 1e-10,         # X 밖 성분 질량의 상대 증가 허용치
    "h_bound": 1e-6,              # H(t) ≤ S(V0) − S(Q) + tol (척도 곱)
    "virial": 1e-3,               # 2계 차분 대 8H 상대 허용치
    "identity": 1e-10,            # |2E − H| 척도 대비
    "h_drift": 1e-3,              # 임계 실험의 H(t) 상대 변화
    "bound_state": 1e-6,          # |I − J|/I, |H|/T
    "action_slope": 1e-4,         # |λ·dS/dλ − H| / (1 + |H|)
    "gn": 1e-6,                   # 몫 ≤ C_M·(1 + tol)
    "weinstein": 1e-6,            # I ≥ bound·(1 − tol)
    "inequality": 1e-8,           # H(W) ≤ S(W) − S(Q) + tol
    "continuum": 1e-5,            # 시드 사이 S 차이
    "continuum_ratio": 0.1,       # 시드 사이 성분 질량 비율 차이 (하한)
    "gn_reference": 1e-5,         # 닫힌 형태 C_M 대비
    "scaling": 1e-6,              # P(Q, λ) 에서 몫 불변
    "sigma_scaling": 1e-6,        # H(U_σ) = σ^{2−N+2/p}·H(U) 상대 허용치
}

REQUIRED_REGIME = {
    ExperimentKind.STABILITY: Regime.SUBCRITICAL,
    ExperimentKind.PER_COMPONENT_STABILITY: Regime.SUBCRITICAL,
    ExperimentKind.SUPERCRITICAL_BLOWUP: Regime.SUPERCRITICAL,
    ExperimentKind.CRITICAL_BLOWUP: Regime.CRITICAL,
}
BLOWUP_KINDS = frozenset({ExperimentKind.SUPERCRITICAL_BLOWUP, ExperimentKind.CRITICAL_BLOWUP})

SLOPE_LAMBDAS = (0.8, 1.25)
SIGMA_VALUES = (0.5, 2.0)
MIN_BLOWUP_RECORDS = 8
RECORD_STRIDE = 100
BLOWUP_RECORD_STRIDE = 10


# =============================================================================
# 데이터 클래스
# =============================================================================

@dataclass
class ExperimentSpec:
    """
    실험 정의

    Attributes:
        kind: 실험 종류
        params: 모델 파라미터
        grid: 계산 격자
        epsilon: 섭동 크기 ε
        dilation: 초임계 확대 계수 λ
        amplitude: 임계 진폭 계수 λ
        t_end: 전개 시간
        thresholds: 판정 기준 (DEFAULT_THRESHOLDS 위에 덮어씀)
        seed: 난수 시드
        subset: 부분계 X (성분 번호 목록)
        variant: 실험 변형 (bc | subset | default | r)
        family: 기준 집합 (orbit | rotation)
        n_random: 무작위 필드 수
        n_seeds: 연속 기저 상태 점검 시드 수
    """
    kind: ExperimentKind
    params: ModelParams
    grid: GridSpec = field(default_factory=GridSpec)
    epsilon: float = 0.01
    dilation: float = 1.1
    amplitude: float = 1.05
    t_end: float = 50.0
    thresholds: dict[str, float] = field(default_factory=dict)
    seed: int = 0
    subset: list[int] | None = None
    variant: str = "default"
    family: str = "orbit"
    n_random: int = 1000
    n_seeds: int = 10
    flow: FlowConfig | None = None
    stepper: StepperConfig | None = None

    def __post_init__(self):
        self.kind = ExperimentKind(self.kind)
        required = REQUIRED_REGIME.get(self.kind)
        if required is not None and self.params.regime is not required:
            raise RegimeError(
                f"{self.kind.value} 실험에는 {required.value} 영역이 필요합니다: "
                f"p={self.params.p}, N={self.params.dim} ({self.params.regime.value})"
            )
        if self.grid.dim != self.params.dim:
            raise ParameterError(f"격자 차원이 파라미터와 다릅니다: {self.grid.dim} ≠ {self.params.dim}")
        unknown = set(self.thresholds) - set(DEFAULT_THRESHOLDS)
        if unknown:
            raise ParameterError(f"알 수 없는 판정 기준입니다: {sorted(unknown)}")
        if self.epsilon < 0:
            raise ParameterError(f"ε 는 음수일 수 없습니다: {self.epsilon}")
        if self.flow is None:
            self.flow = FlowConfig(grid=self.grid, seed=self.seed)
        else:
            self.flow = replace(self.flow, grid=self.grid)
        if self.stepper is None:
            stride = BLOWUP_RECORD_STRIDE if self.kind in BLOWUP_KINDS else RECORD_STRIDE
            self.stepper = StepperConfig(t_end=self.t_end, record_stride=stride)
        else:
            self.stepper = replace(self.stepper, t_end=self.t_end)

    def threshold(self, name: str) -> float:
        return float(self.thresholds.get(name, DEFAULT_THRESHOLDS[name]))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "params": self.params.to_dict(),
            "grid": self.grid.to_dict(),
            "epsilon": self.epsilon,
            "dilation": self.dilation,
            "amplitude": self.amplitude,
            "t_end": self.t_end,
            "thresholds": {**DEFAULT_THRESHOLDS, **self.thresholds},
            "seed": self.seed,
            "subset": self.subset,
            "variant": self.variant,
            "family": self.family,
            "n_random": self.n_random,
            "n_seeds": self.n_seeds,
            "flow": self.flow.to_dict(),
            "stepper": self.stepper.to_dict(),
        }


@dataclass
class ExperimentOutcome:
    """
    실험 결과

    Attributes:
        kind: 실험 종류
        status: PASS / FAIL / INCONCLUSIVE
        measured: 측정값 (판정에 사용한 값 전부)
        checks: 판정 항목별 통과 여부
        artifacts: 저장한 파일 경로
        trace: 시간 전개 기록 (있을 때)
        snapshots: 저장할 필드 스냅샷
    """
    kind: ExperimentKind
    status: Status
    measured: dict[str, Any] = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)
    artifacts: dict[str, str] = field(default_factory=dict)
    trace: EvolutionTrace | None = None
    snapshots: dict[str, FieldVec] = field(default_factory=dict)
    spec: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status is Status.PASS

    @property
    def exit_code(self) -> int:
        return self.status.exit_code

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "status": self.status.value,
            "measured": _jsonable(self.measured),
            "checks": self.checks,
            "artifacts": self.artifacts,
            "trace": self.trace.summary_dict() if self.trace else None,
            "spec": _jsonable(self.spec),
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=indent)

    def save(self, output_dir: str | Path) -> dict[str, str]:
        """summary.json, trace.csv, 스냅샷(.npz) 저장"""
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        if self.trace is not None and self.trace.times:
            self.artifacts["trace"] = str(self.trace.to_csv(output_dir / "trace.csv"))
        for name, U in self.snapshots.items():
            self.artifacts[name] = str(save_snapshot(output_dir / f"{name}.npz", U))
        summary = output_dir / "summary.json"
        self.artifacts["summary"] = str(summary)
        summary.write_text(self.to_json(), encoding="utf-8")
        return self.artifacts


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        return None if not math.isfinite(float(value)) else float(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def _decide(checks: dict[str, bool], inconclusive: bool = False) -> Status:
    if inconclusive:
        return Status.INCONCLUSIVE
    return Status.PASS if all(checks.values()) else Status.FAIL


# =============================================================================
# 공통 구성 요소
# =============================================================================

def smooth_perturbation(Q: FieldVec, seed: int) -> FieldVec:
    """
    무작위 매끄러운 섭동 η

    성분별로 Q_i 방향의 실수 성분을 제거하고 ‖η‖_{H¹} = 1 로 정규화합니다.
    """
    grid = Q.grid
    eta = np.array(random_smooth_field(grid, Q.M, rng=seed).data)
    for i in range(Q.M):
        q = Q.data[i]
        q_mass = float(np.sum(np.abs(q) ** 2) * grid.cell_volume)
        if q_mass > 0:
            overlap = np.real(np.vdot(q, eta[i])) * grid.cell_volume
            eta[i] -= overlap / q_mass * q
    eta_field = FieldVec(eta, grid)
    return eta_field * (1.0 / h1_norm(eta_field))


def _ground_state_profile(spec: ExperimentSpec) -> FieldVec:
    result = ground_state(spec.params, spec.flow)
    logger.info("기저 상태: M=%.8f, S=%.8f, 잔차=%s", result.report.M, result.report.S,
                np.round(result.bs_residual, 12).tolist())
    return result.profile


def _distance_monitor(spec: ExperimentSpec, Q: FieldVec) -> Callable[[FieldVec], float]:
    if spec.family == "rotation":
        q_scalar = FieldVec.from_components([scalar_ground_state(spec.grid, spec.params.p)])
        return family_monitor(rotation_family(q_scalar))
    return orbital_monitor(Q)


def _stability_checks(spec: ExperimentSpec, trace: EvolutionTrace, distances: list[float]) -> tuple[dict, dict]:
    sup_d = float(np.max(distances))
    if spec.epsilon > 0:
        limit = spec.threshold("distance_factor") * spec.epsilon
    else:
        limit = spec.threshold("zero_floor")
    measured = {
        "epsilon": spec.epsilon,
        "initial_distance": float(distances[0]),
        "sup_distance": sup_d,
        "distance_limit": limit,
        "ratio": sup_d / spec.epsilon if spec.epsilon > 0 else None,
        "mass_drift": trace.mass_drift().tolist(),
        "energy_drift": trace.energy_drift(),
        "final_time": trace.final_time,
    }
    checks = {
        "orbit_close": sup_d <= limit,
        "no_blowup": not trace.blowup_detected,
        "reached_t_end": trace.final_time >= spec.t_end * (1 - 1e-9),
    }
    return measured, checks


# =============================================================================
# 실험
# =============================================================================

def run_stability(spec: ExperimentSpec) -> ExperimentOutcome:
    """V0 = Q + ε·η 를 전개하고 sup_t d(V(t), 기준 집합) ≤ 5ε 인지 판정"""
    Q = _ground_state_profile(spec)
    V0 = Q + smooth_perturbation(Q, spec.seed) * spec.epsilon
    monitor = _distance_monitor(spec, Q)
    trace = evolve(V0, spec.params, spec.stepper, monitors={"orbital_distance": monitor})

    measured, checks = _stability_checks(spec, trace, trace.orbital_distance)
    status = _decide(checks, inconclusive=trace.tail_violation)
    logger.info("안정성: sup d = %.3e (한도 %.3e) → %s", measured["sup_distance"], measured["distance_limit"], status.value)
    return ExperimentOutcome(
        kind=spec.kind, status=status, measured=measured, checks=checks, trace=trace,
        snapshots={"initial": V0, "final": trace.final_state, "ground_state": Q},
        spec=spec.to_dict(),
    )


def run_percomponent_stability(spec: ExperimentSpec) -> ExperimentOutcome:
    """
    성분별 안정성

    - variant=bc: 행 합 β 가 같은 K 에서 (β^{−1/(2p)}Q, ...) 를 섭동
    - variant=subset: X 부분계 기저 상태 + X 밖 ε 크기 성분
    """
    params, grid = spec.params, spec.grid
    variant = spec.variant if spec.variant != "default" else ("subset" if spec.subset else "bc")

    if variant == "bc":
        a = r_coefficients(params.coupling, params.p)
        q = scalar_ground_state(grid, params.p).values
        B = FieldVec(a.reshape(-1, *([1] * grid.dim)) * q, grid)
        V0 = B + smooth_perturbation(B, spec.seed) * spec.epsilon
        trace = evolve(V0, params, spec.stepper, monitors={"orbital_distance": orbital_monitor(B)})
        measured, checks = _stability_checks(spec, trace, trace.orbital_distance)
        measured["coefficients"] = a.tolist()
        measured["component_masses"] = trace.masses[0]
        status = _decide(checks, inconclusive=trace.tail_violation)
        return ExperimentOutcome(
            kind=spec.kind, status=status, measured=measured, checks=checks, trace=trace,
            snapshots={"initial": V0, "final": trace.final_state, "bc_state": B},
            spec={**spec.to_dict(), "variant": variant},
        )

    if variant != "subset":
        raise ParameterError(f"알 수 없는 변형입니다: {spec.variant}")
    subset = sorted(spec.subset or [])
    if not subset or len(subset) >= params.M or not all(0 <= i < params.M for i in subset):
        raise ParameterError(f"X 는 {{0..M−1}} 의 진부분집합이어야 합니다: {subset}")
    outside = [i for i in range(params.M) if i not in subset]

    sub_params = params.with_coupling(params.coupling[np.ix_(subset, subset)])
    sub_flow = replace(spec.flow, initializer=Initializer.GAUSSIAN)
    Q_X = ground_state(sub_params, sub_flow).profile

    padded = np.zeros((params.M, *grid.shape), dtype=complex)
    padded[subset] = Q_X.data
    Q_pad = FieldVec(padded, grid)
    eta = smooth_perturbation(Q_pad, spec.seed)
    V0 = Q_pad + eta * spec.epsilon

    def sub_distance(V: FieldVec) -> float:
        return orbital_distance(FieldVec(V.data[subset], grid), Q_X).distance

    trace = evolve(V0, params, spec.stepper, monitors={"orbital_distance": sub_distance})
    measured, checks = _stability_checks(spec, trace, trace.orbital_distance)

    masses = np.asarray(trace.masses)
    initial_out = masses[0, outside]
    growth = masses[:, outside] - initial_out
    allowed = spec.threshold("mass_growth") * np.maximum(initial_out, np.finfo(float).tiny)
    checks["outside_mass_bounded"] = bool(np.all(growth <= allowed))
    measured["outside_components"] = outside
    measured["outside_initial_mass"] = initial_out.tolist()
    measured["outside_max_mass"] = masses[:, outside].max(axis=0).tolist()
    status = _decide(checks, inconclusive=trace.tail_violation)
    return ExperimentOutcome(
        kind=spec.kind, status=status, measured=measured, checks=checks, trace=trace,
        snapshots={"initial": V0, "final": trace.final_state, "subsystem_ground_state": Q_X},
        spec={**spec.to_dict(), "variant": variant},
    )


def _blowup_records(trace: EvolutionTrace) -> slice:
    """폭발 판정이 난 마지막 기록은 해상도가 부족하므로 제외"""
    return slice(0, len(trace.times) - 1 if trace.blowup_detected and len(trace.times) > 3 else len(trace.times))


def _evolve_until_blowup(V0: FieldVec, params: ModelParams, stepper: StepperConfig) -> EvolutionTrace:
    """
    폭발 전 기록이 MIN_BLOWUP_RECORDS 보다 적으면 기록 간격을 1/10 로 줄여 다시 전개

    record_stride = 1 에서도 모자라면 마지막 결과를 그대로 돌려줍니다.
    """
    trace = evolve(V0, params, stepper)
    while trace.blowup_detected and len(trace.times) < MIN_BLOWUP_RECORDS and stepper.record_stride > 1:
        stepper = replace(stepper, record_stride=max(1, stepper.record_stride // 10))
        logger.info("폭발 전 기록 %d 개: 기록 간격 %.3g 로 다시 전개", len(trace.times), stepper.record_interval)
        trace = evolve(V0, params, stepper)
    return trace


def run_supercritical_blowup(spec: ExperimentSpec) -> ExperimentOutcome:
    """
    V0 = P(Q, λ) 의 폭발

    판정: H(V0) < 0, H(t) ≤ S(V0) − S(Q), 분산 2계 차분 ≤ 8·max H < 0, 폭발 플래그.
    variant=r 이면 V0 = (a_i e^{iθ_i} P(Q_scalar, λ)) 로 모든 성분이 함께 폭발하는지 봅니다.
    """
    params, grid = spec.params, spec.grid
    rng = np.random.default_rng(spec.seed)

    if spec.variant == "r":
        a = r_coefficients(params.coupling, params.p)
        q = FieldVec.from_components([scalar_ground_state(grid, params.p)])
        v0 = dilation(q, spec.dilation).data[0]
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, size=params.M))
        V0 = FieldVec((a * phases).reshape(-1, *([1] * grid.dim)) * v0, grid)
        Q = FieldVec((a.astype(complex)).reshape(-1, *([1] * grid.dim)) * q.data[0], grid)
    else:
        Q = _ground_state_profile(spec)
        V0 = dilation(Q, spec.dilation)

    rQ, r0 = report(Q, params), report(V0, params)
    bound = r0.S - rQ.S
    trace = _evolve_until_blowup(V0, params, spec.stepper)
    window = _blowup_records(trace)

    H = np.asarray(trace.pohozaev)[window]
    scale = max(1.0, abs(rQ.S))
    h_max = float(np.max(H))
    measured: dict[str, Any] = {
        "dilation": spec.dilation,
        "H0": r0.H,
        "S0_minus_SQ": bound,
        "max_H": h_max,
        "blowup_time": trace.final_time if trace.blowup_detected else None,
        "blowup_reason": trace.blowup_reason,
    }
    checks = {
        "H0_negative": r0.H < 0,
        "H_below_action_gap": h_max <= bound + spec.threshold("h_bound") * scale,
        "blowup_detected": trace.blowup_detected,
    }

    windowed = replace(trace, times=trace.times[window], variance=trace.variance[window],
                       pohozaev=trace.pohozaev[window])
    measured["variance_records"] = len(windowed.times)
    too_few_records = len(windowed.times) < 3
    if too_few_records:
        logger.warning("분산 2계 차분에 필요한 기록이 부족합니다: %d 개", len(windowed.times))
    else:
        _, d2 = variance_second_difference(windowed)
        measured["max_variance_second_difference"] = float(np.max(d2))
        measured["virial_residual"] = virial_residual(windowed)
        tol = spec.threshold("virial") * (1 + 8 * abs(h_max))
        checks["variance_concave"] = bool(np.max(d2) < 0 and np.all(d2 <= 8 * h_max + tol))

    if spec.variant == "r":
        T = np.asarray(trace.kinetics)[window]
        ratios = T / T[:, :1]
        spread = float(np.max(np.abs(ratios - ratios[0])))
        measured["kinetic_ratio_spread"] = spread
        checks["simultaneous"] = spread < 1e-6

    status = _decide(checks, inconclusive=too_few_records or (trace.tail_violation and not trace.blowup_detected))
    logger.info("초임계 폭발: H0=%.4g, t*≈%s → %s", r0.H, measured["blowup_time"], status.value)
    return ExperimentOutcome(
        kind=spec.kind, status=status, measured=measured, checks=checks, trace=trace,
        snapshots={"initial": V0, "ground_state": Q},
        spec=spec.to_dict(),
    )


def run_critical_blowup(spec: ExperimentSpec) -> ExperimentOutcome:
    """V0 = λU (진폭 스케일). 판정: H(V0) = 2E(V0) < 0, H(t) 일정, 폭발 플래그"""
    params = spec.params
    U = _ground_state_profile(spec)
    V0 = U * spec.amplitude
    r0 = report(V0, params)
    trace = _evolve_until_blowup(V0, params, spec.stepper)
    window = _blowup_records(trace)

    E = np.asarray(trace.energy)[window]
    H = np.asarray(trace.pohozaev)[window]
    identity = np.abs(2 * E - H) / np.maximum(1.0, np.abs(E) + np.abs(H))
    drift = float(np.max(np.abs(H - r0.H)) / max(abs(r0.H), np.finfo(float).tiny))
    measured = {
        "amplitude": spec.amplitude,
        "H0": r0.H,
        "E0": r0.E,
        "identity_residual": float(np.max(identity)),
        "initial_identity_residual": critical_identity_residual(V0, params),
        "H_drift": drift,
        "blowup_time": trace.final_time if trace.blowup_detected else None,
        "blowup_reason": trace.blowup_reason,
    }
    checks = {
        "H0_negative": r0.H < 0,
        "identity": float(np.max(identity)) < spec.threshold("identity"),
        "H_constant": drift < spec.threshold("h_drift"),
        "blowup_detected": trace.blowup_detected,
    }
    status = _decide(checks, inconclusive=trace.tail_violation and not trace.blowup_detected)
    logger.info("임계 폭발: H0=%.4g, t*≈%s → %s", r0.H, measured["blowup_time"], status.value)
    return ExperimentOutcome(
        kind=spec.kind, status=status, measured=measured, checks=checks, trace=trace,
        snapshots={"initial": V0, "ground_state": U},
        spec=spec.to_dict(),
    )


def _random_fields(spec: ExperimentSpec, count: int, offset: int = 0):
    for k in range(count):
        yield random_smooth_field(spec.grid, spec.params.M, rng=(spec.seed, offset, k))


def _negative_pohozaev(W: FieldVec, params: ModelParams) -> FieldVec | None:
    """진폭을 키워 H(tW) < 0 인 tW (J ≤ 0 이면 None)"""
    r = report(W, params)
    if r.J <= 0:
        return None
    Np = params.dim * params.p
    t_crit = ((2 * params.p + 2) * r.T / (Np * r.J)) ** (1 / (2 * params.p))
    return W * (1.2 * t_crit)


def run_identity_suite(spec: ExperimentSpec) -> ExperimentOutcome:
    """
    범함수 항등식 모음

    기저 상태에서 I = J, H = 0, (BS) 잔차; 무작위 필드에서 λ·dS/dλ = H,
    σ 스케일링 H(U_σ) = σ^{2−N+2/p}·H(U),
    GN 부등식, Weinstein 하한, 영역별 항등식/부등식; 아임계 M = 2 이상이면
    시드별 기저 상태 S 의 일치를 점검합니다.
    """
    params = spec.params
    result = ground_state(params, spec.flow)
    Q = result.profile
    rQ = result.report
    C_M = gn_constant(Q, params)
    lambda_g = rQ.J

    measured: dict[str, Any] = {
        "bound_state_identity": abs(rQ.I - rQ.J) / rQ.I,
        "pohozaev": abs(rQ.H) / rQ.T,
        "bs_residual": float(np.max(result.bs_residual)),
        "C_M": C_M,
        "lambda_G": lambda_g,
    }
    checks = {
        "I_equals_J": measured["bound_state_identity"] < spec.threshold("bound_state"),
        "H_zero": measured["pohozaev"] < spec.threshold("bound_state"),
    }

    slope_errors, gn_ratios, weinstein_ratios, inequality_gaps, critical_residuals = [], [], [], [], []
    for k, W in enumerate(_random_fields(spec, spec.n_random)):
        r = report(W, params)
        if r.T > 0 and r.M > 0:
            gn_ratios.append(gn_quotient(W, params) / C_M)
        if r.J > 0:
            weinstein_ratios.append(r.I / weinstein_bound(W, params, lambda_g))
        if params.regime is Regime.CRITICAL:
            critical_residuals.append(critical_identity_residual(W, params) / (1 + abs(r.E) + abs(r.H)))
        if params.regime is Regime.SUPERCRITICAL:
            W_neg = _negative_pohozaev(W, params)
            if W_neg is not None:
                rn = report(W_neg, params)
                inequality_gaps.append(rn.H - (rn.S - rQ.S))
        if k < 5:
            for lam in SLOPE_LAMBDAS:
                H_lam = report(dilation(W, lam), params).H
                slope_errors.append(abs(lam * action_slope(W, params, lam) - H_lam) / (1 + abs(H_lam)))

    measured["gn_max_ratio"] = float(np.max(gn_ratios)) if gn_ratios else None
    measured["gn_violations"] = int(np.sum(np.asarray(gn_ratios) > 1 + spec.threshold("gn")))
    measured["weinstein_min_ratio"] = float(np.min(weinstein_ratios)) if weinstein_ratios else None
    measured["action_slope_error"] = float(np.max(slope_errors)) if slope_errors else None
    checks["gn_inequality"] = measured["gn_violations"] == 0
    checks["weinstein"] = all(w >= 1 - spec.threshold("weinstein") for w in weinstein_ratios)
    checks["action_slope"] = all(e < spec.threshold("action_slope") for e in slope_errors)

    sigma_errors = []
    exponent = 2 - params.dim + 2 / params.p
    spread = min(spec.grid.box_length) / 16
    for k in range(min(spec.n_random, 5)):
        W = random_smooth_field(spec.grid, params.M, rng=(spec.seed, 2, k), width=(0.6, 1.0), spread=spread)
        r = report(W, params)
        for sigma in SIGMA_VALUES:
            law = sigma ** exponent * r.H
            H_sigma = report(sigma_scaling(W, sigma, params.p), params).H
            sigma_errors.append(abs(H_sigma - law) / (sigma ** exponent * r.T))
    measured["sigma_scaling_error"] = float(np.max(sigma_errors)) if sigma_errors else None
    checks["sigma_scaling"] = all(e < spec.threshold("sigma_scaling") for e in sigma_errors)

    if critical_residuals:
        measured["critical_identity"] = float(np.max(critical_residuals))
        checks["critical_identity"] = measured["critical_identity"] < spec.threshold("identity")
    if inequality_gaps:
        measured["inequality_max_gap"] = float(np.max(inequality_gaps))
        checks["supercritical_inequality"] = measured["inequality_max_gap"] <= spec.threshold("inequality")

    if params.regime is Regime.SUBCRITICAL and params.M > 1 and spec.n_seeds > 1:
        actions, fractions = continuum_scan(params, spec.flow, spec.n_seeds, seed=spec.seed)
        measured["continuum_actions"] = actions
        measured["continuum_mass_fractions"] = fractions
        measured["continuum_spread"] = float(np.ptp(actions))
        checks["continuum_action"] = measured["continuum_spread"] < spec.threshold("continuum")
        measured["continuum_fraction_spread"] = float(np.ptp(fractions))
        if np.allclose(params.coupling, params.coupling[0, 0]):
            checks["continuum_ratios_vary"] = measured["continuum_fraction_spread"] > spec.threshold("continuum_ratio")

    status = _decide(checks)
    logger.info("항등식 점검: %s → %s", {k: v for k, v in checks.items()}, status.value)
    return ExperimentOutcome(
        kind=spec.kind, status=status, measured=measured, checks=checks,
        snapshots={"ground_state": Q}, spec=spec.to_dict(),
    )


def continuum_scan(params: ModelParams, flow: FlowConfig, n_seeds: int, seed: int = 0) -> tuple[list[float], list[float]]:
    """무작위 초기화 시드마다 기저 상태의 S 와 첫 성분 질량 비율"""
    actions, fractions = [], []
    for k in range(n_seeds):
        cfg = replace(flow, initializer=Initializer.RANDOM, seed=seed + k)
        result = ground_state(params, cfg)
        actions.append(result.report.S)
        fractions.append(result.report.M_i[0] / result.report.M)
    return actions, fractions


def run_gn_suite(spec: ExperimentSpec) -> ExperimentOutcome:
    """
    Gagliardo-Nirenberg 점검

    C_M (1차원 스칼라는 닫힌 형태와 비교), P(Q, λ) 불변, 무작위 필드 위반 수,
    등호 재스케일 ν·W(ζx).
    """
    params, grid = spec.params, spec.grid
    result = ground_state(params, spec.flow)
    Q = result.profile
    C_M = gn_constant(Q, params)
    measured: dict[str, Any] = {"C_M": C_M}
    checks: dict[str, bool] = {}

    if params.M == 1 and grid.dim == 1:
        q = FieldVec.from_components([scalar_ground_state(grid, params.p)])
        reference = gn_constant(q, ModelParams.scalar(params.p, k=float(params.coupling[0, 0])))
        measured["C_M_closed_form"] = reference
        checks["closed_form"] = abs(C_M - reference) / reference < spec.threshold("gn_reference")

    scaled = [gn_quotient(dilation(Q, lam), params) for lam in (0.8, 1.25)]
    measured["dilated_quotients"] = scaled
    checks["dilation_invariant"] = all(abs(s - C_M) / C_M < spec.threshold("scaling") for s in scaled)

    ratios = []
    for W in _random_fields(spec, spec.n_random, offset=1):
        r = report(W, params)
        if r.T > 0 and r.M > 0:
            ratios.append(gn_quotient(W, params) / C_M)
    measured["max_ratio"] = float(np.max(ratios)) if ratios else None
    measured["violations"] = int(np.sum(np.asarray(ratios) > 1 + spec.threshold("gn")))
    checks["no_violations"] = measured["violations"] == 0

    doubled = gn_equality_rescale(dilation(Q, 1.2) * 2.0, params, Q)
    rD, rQ = report(doubled, params), result.report
    measured["rescale_mass_error"] = abs(rD.M - rQ.M) / rQ.M
    measured["rescale_potential_error"] = abs(rD.J - rQ.J) / rQ.J
    checks["equality_rescale"] = max(measured["rescale_mass_error"], measured["rescale_potential_error"]) < spec.threshold("scaling")

    status = _decide(checks)
    logger.info("GN 점검: C_M=%.8f, 위반 %d → %s", C_M, measured["violations"], status.value)
    return ExperimentOutcome(
        kind=spec.kind, status=status, measured=measured, checks=checks,
        snapshots={"ground_state": Q}, spec=spec.to_dict(),
    )


def weak_instability_demo(
    params: ModelParams,
    flow: FlowConfig,
    lambdas: tuple[float, ...] = (1.01, 1.05, 1.1),
) -> list[dict[str, float]]:
    """
    Nehari 최소 상태 U 근방의 H < 0 메커니즘 (판정 없음)

    각 λ 에 대해 W = P(U, λ) 의 H(W), S(W) − S(U), λ*(W) 와
    S(P(W, λ*)) ≥ S(U) 일 때 H(W) ≤ S(W) − S(U) 가 성립하는지 기록합니다.
    """
    if params.regime is not Regime.SUPERCRITICAL:
        raise RegimeError(f"약한 불안정성 메커니즘은 초임계 영역에서 봅니다: p={params.p}, N={params.dim}")
    U = ground_state(params, flow).profile
    rU = report(U, params)
    rows = []
    for lam in lambdas:
        W = dilation(U, lam)
        rW = report(W, params)
        lam_star = lambda_star(W, params)
        S_peak = report(dilation(W, lam_star), params).S
        applies = S_peak >= rU.S - 1e-10 * max(1.0, abs(rU.S))
        rows.append({
            "lambda": lam,
            "H": rW.H,
            "S_minus_SU": rW.S - rU.S,
            "lambda_star": lam_star,
            "S_at_lambda_star": S_peak,
            "inequality_applies": applies,
            "inequality_holds": (rW.H <= rW.S - rU.S + 1e-8) if applies else None,
        })
        logger.info("λ=%.3f: H=%.4g, S(W)−S(U)=%.4g, λ*=%.6f", lam, rW.H, rW.S - rU.S, lam_star)
    return rows


RUNNERS: dict[ExperimentKind, Callable[[ExperimentSpec], ExperimentOutcome]] = {
    ExperimentKind.STABILITY: run_stability,
    ExperimentKind.PER_COMPONENT_STABILITY: run_percomponent_stability,
    ExperimentKind.SUPERCRITICAL_BLOWUP: run_supercritical_blowup,
    ExperimentKind.CRITICAL_BLOWUP: run_critical_blowup,
    ExperimentKind.IDENTITY_SUITE: run_identity_suite,
    ExperimentKind.GN_SUITE: run_gn_suite,
}


def run_experiment(spec: ExperimentSpec) -> ExperimentOutcome:
    """종류별 실행 함수로 전달"""
    started = time.perf_counter()
    outcome = RUNNERS[spec.kind](spec)
    outcome.measured["elapsed_sec"] = round(time.perf_counter() - started, 3)
    return outcome


# =============================================================================
# 스윕 (동시 실행)
# =============================================================================

@dataclass
class SweepResult:
    """스윕 작업 하나의 결과"""
    index: int
    kind: str
    output_dir: str
    status: str = Status.INCONCLUSIVE.value
    exit_code: int = Status.INCONCLUSIVE.exit_code
    elapsed_sec: float = 0.0
    error: str | None = None

    CSV_HEADER = ("index", "kind", "status", "exit_code", "elapsed_sec", "output_dir", "error")

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.CSV_HEADER}


def _execute_job(spec: ExperimentSpec, output_dir: str) -> dict:
    """작업 프로세스에서 실행: 실험 후 결과 저장"""
    outcome = run_experiment(spec)
    outcome.save(output_dir)
    return {"status": outcome.status.value, "exit_code": outcome.exit_code}


async def _run_job(
    loop: asyncio.AbstractEventLoop,
    pool: ProcessPoolExecutor,
    semaphore: asyncio.Semaphore,
    index: int,
    spec: ExperimentSpec,
    output_dir: Path,
) -> SweepResult:
    async with semaphore:
        started = time.perf_counter()
        result = SweepResult(index=index, kind=spec.kind.value, output_dir=str(output_dir))
        logger.info("작업 %d 시작: %s → %s", index, spec.kind.value, output_dir)
        outcome = await loop.run_in_executor(pool, _execute_job, spec, str(output_dir))
        result.status = outcome["status"]
        result.exit_code = outcome["exit_code"]
        result.elapsed_sec = time.perf_counter() - started
        return result


async def run_sweep_async(
    specs: list[ExperimentSpec],
    output_root: str | Path,
    max_concurrent: int = 4,
) -> list[SweepResult]:
    """
    여러 실험을 동시에 실행

    Semaphore 로 동시 실행 수를 제한하고, 각 작업은 프로세스 풀에서
    자신만의 출력 디렉터리로 실행합니다.
    """
    output_root = Path(output_root)
    output_root.mkdir(parents=True, exist_ok=True)
    loop = asyncio.get_running_loop()
    semaphore = asyncio.Semaphore(max_concurrent)
    dirs = [output_root / f"job_{i:03d}_{spec.kind.value}" for i, spec in enumerate(specs)]

    with ProcessPoolExecutor(max_workers=max_concurrent) as pool:
        tasks = [_run_job(loop, pool, semaphore, i, spec, d) for i, (spec, d) in enumerate(zip(specs, dirs))]
        gathered = await asyncio.gather(*tasks, return_exceptions=True)

    results = []
    for i, item in enumerate(gathered):
        if isinstance(item, BaseException):
            logger.error("작업 %d 실패: %s", i, item)
            exit_code = Status.INCONCLUSIVE.exit_code if isinstance(item, LabError) else Status.FAIL.exit_code
            results.append(SweepResult(index=i, kind=specs[i].kind.value, output_dir=str(dirs[i]),
                                       status="error", exit_code=exit_code, error=f"{type(item).__name__}: {item}"))
        else:
            results.append(item)

    with (output_root / "sweep.csv").open("w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=SweepResult.CSV_HEADER)
        writer.writeheader()
        writer.writerows(r.to_dict() for r in results)
    return results


def run_sweep(specs: list[ExperimentSpec], output_root: str | Path, max_concurrent: int = 4) -> list[SweepResult]:
    """run_sweep_async 의 동기 진입점"""
    return asyncio.run(run_sweep_async(specs, output_root, max_concurrent))
