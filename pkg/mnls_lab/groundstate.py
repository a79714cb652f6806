"""
Ground State Solver - 정규화 경사 흐름으로 제약 최소화와 기저 상태 계산

주요 기능:
    - minimize: 질량 제약(전체 또는 성분별) 위에서 E 를 줄이는 경사 흐름
    - nehari_ground_state: Nehari 집합 I = J 위에서 S 를 줄이는 흐름 (모든 영역)
    - rescale_to_bound_state: 공통 승수 ω 로 (BS) 의 해로 변환
    - classify_structure: 지지 집합, 비례 여부, R 소속 판정
    - mu_of_groundstate: 기저 상태 질량 μ

흐름은 −E'(U) − ωU 의 사영 기울기를 지수 적분 인자(ETD1)로 진행합니다.

    û ← e^{−τ(|k|²+α)}û + (1 − e^{−τ(|k|²+α)})/(|k|²+α) · F̂,  F = N(U) − ωU + αU

고정점은 정확히 Δu − ωu + N(U) = 0 을 만족합니다. 매 단계 후 제약으로
다시 정규화하고, 목적 함수가 증가하면 τ 를 절반으로 줄입니다.

사용 예시:
    from mnls_lab.groundstate import FlowConfig, TotalMass, minimize, rescale_to_bound_state

    params = ModelParams.scalar(p=1.0)
    result = minimize(TotalMass(4.0), params, FlowConfig())
    bound = rescale_to_bound_state(result, params)
    print(bound.to_json())
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, ClassVar

import numpy as np

from .diagnostics import orbital_distance
from .errors import (
    ConvergenceError,
    FlowDivergenceError,
    FunctionalError,
    NotABoundStateError,
    ParameterError,
    RegimeError,
)
from .field_core import (
    ComponentField,
    FieldVec,
    GridSpec,
    component_masses,
    fft_field,
    ifft_field,
    reference_soliton,
    resample_scaled,
    shift,
)
from .functionals import (
    FunctionalReport,
    ModelParams,
    P1Witness,
    Regime,
    bound_state_residual,
    multiplier_estimate,
    p1_witness,
    phase_rate,
    report,
    report_from_data,
    shared_profile_witness,
)

logger = logging.getLogger(__name__)


# =============================================================================
# 상수 정의
# =============================================================================

CONSTRAINT_TOLERANCE = 1e-12
MULTIPLIER_SPREAD_TOLERANCE = 1e-6
BOUND_STATE_RESIDUAL_TOLERANCE = 1e-5
STRUCTURE_TOLERANCE = 1e-4
DEFAULT_MASS_GUESS = 4.0

# 한 반복에서 τ 를 줄이는 최대 횟수
MAX_BACKTRACK = 40
# 목적 함수 증가 허용폭 (상대)
ENERGY_SLACK = 1e-12
# 이 크기를 넘는 진폭은 발산으로 판정
DIVERGENCE_AMPLITUDE = 1e8
COLLAPSE_MASS = 1e-300


class Initializer(str, Enum):
    GAUSSIAN = "gaussian"
    SECH_PROFILE = "sech-profile"
    RANDOM = "random"
    USER = "user"


# =============================================================================
# 데이터 클래스
# =============================================================================

@dataclass(frozen=True)
class ConstraintSpec:
    """질량 제약 (TotalMass 또는 PerComponentMass)"""
    kind: ClassVar[str] = "abstract"

    def normalize(self, data: np.ndarray, grid: GridSpec) -> np.ndarray:
        raise NotImplementedError

    def residual(self, data: np.ndarray, grid: GridSpec) -> float:
        raise NotImplementedError

    def multipliers(self, r: FunctionalReport) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class TotalMass(ConstraintSpec):
    """M(U) = μ̂"""
    value: float
    kind: ClassVar[str] = "total"

    def __post_init__(self):
        if not (np.isfinite(self.value) and self.value > 0):
            raise ParameterError(f"질량 목표는 양수여야 합니다: {self.value}")

    def normalize(self, data: np.ndarray, grid: GridSpec) -> np.ndarray:
        mass = float(component_masses(data, grid).sum())
        if not mass > COLLAPSE_MASS:
            raise FlowDivergenceError("필드가 0 으로 붕괴했습니다")
        return data * math.sqrt(self.value / mass)

    def residual(self, data: np.ndarray, grid: GridSpec) -> float:
        return abs(float(component_masses(data, grid).sum()) - self.value) / self.value

    def multipliers(self, r: FunctionalReport) -> np.ndarray:
        return np.full(len(r.M_i), (r.J - r.T) / r.M)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "values": [self.value]}


@dataclass(frozen=True)
class PerComponentMass(ConstraintSpec):
    """‖u_i‖² = c_i"""
    values: tuple[float, ...]
    kind: ClassVar[str] = "per_component"

    def __post_init__(self):
        values = tuple(float(c) for c in np.atleast_1d(self.values))
        if not values or not all(np.isfinite(c) and c > 0 for c in values):
            raise ParameterError(f"성분별 질량 목표는 모두 양수여야 합니다: {values}")
        object.__setattr__(self, "values", values)

    def normalize(self, data: np.ndarray, grid: GridSpec) -> np.ndarray:
        masses = component_masses(data, grid)
        if not np.all(masses > COLLAPSE_MASS):
            raise FlowDivergenceError(f"성분이 0 으로 붕괴했습니다: {masses.tolist()}")
        factors = np.sqrt(np.asarray(self.values) / masses)
        return data * factors.reshape(-1, *([1] * grid.dim))

    def residual(self, data: np.ndarray, grid: GridSpec) -> float:
        target = np.asarray(self.values)
        return float(np.max(np.abs(component_masses(data, grid) - target) / target))

    def multipliers(self, r: FunctionalReport) -> np.ndarray:
        return (np.asarray(r.J_i) - np.asarray(r.T_i)) / np.asarray(r.M_i)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "values": list(self.values)}


def constraint_from_dict(data: dict) -> ConstraintSpec:
    kind = data.get("kind", "total")
    values = data.get("values", [DEFAULT_MASS_GUESS])
    if kind == TotalMass.kind:
        return TotalMass(float(np.atleast_1d(values)[0]))
    if kind == PerComponentMass.kind:
        return PerComponentMass(tuple(values))
    raise ParameterError(f"알 수 없는 제약 종류입니다: {kind}")


@dataclass
class FlowConfig:
    """
    경사 흐름 설정

    Attributes:
        grid: 계산 격자
        tau: 의사 시간 간격 τ
        max_iter: 최대 반복 수
        tol: 사영 기울기 잔차와 상대 에너지 감소 허용치
        shift: ETD 선형부 추가 이동 α
        mass_floor_ratio: 전체 질량 대비 0 성분 판정 비율
        initializer: gaussian | sech-profile | random | user
        seed: 난수 시드
        user_field: initializer=user 일 때의 초기 필드
        mass_guess: mu_of_groundstate 가 사용하는 질량 목표
        log_every: 진행 로그 간격
    """
    grid: GridSpec = field(default_factory=GridSpec)
    tau: float = 1.0
    max_iter: int = 5000
    tol: float = 1e-9
    shift: float = 0.0
    mass_floor_ratio: float = 1e-10
    initializer: Initializer | str = Initializer.GAUSSIAN
    seed: int | None = 0
    user_field: FieldVec | None = None
    mass_guess: float = DEFAULT_MASS_GUESS
    log_every: int = 200

    def __post_init__(self):
        if not self.tau > 0:
            raise ParameterError(f"τ 는 양수여야 합니다: {self.tau}")
        if not self.tol > 0:
            raise ParameterError(f"tol 은 양수여야 합니다: {self.tol}")
        if self.shift < 0:
            raise ParameterError(f"shift 는 음수일 수 없습니다: {self.shift}")
        self.initializer = Initializer(self.initializer)

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "tau": self.tau,
            "max_iter": self.max_iter,
            "tol": self.tol,
            "shift": self.shift,
            "mass_floor_ratio": self.mass_floor_ratio,
            "initializer": self.initializer.value,
            "seed": self.seed,
            "mass_guess": self.mass_guess,
            "log_every": self.log_every,
        }


@dataclass
class StructureTags:
    """
    구조 분류 결과

    Attributes:
        support: 0 이 아닌 성분 집합 X
        proportional: 0 이 아닌 성분들이 하나의 공통 윤곽에 비례하는지
        r_member: 각 성분이 스칼라 기저 상태 Q 의 상수배(회전, 평행이동 포함)인지
        coefficients: |u_i| ≈ a_i·|Q| 의 a_i
        phases: 정렬 위상 θ_i
        translation: 공통 평행이동 y
        deviations: 성분별 상대 L² 편차
    """
    support: list[int] = field(default_factory=list)
    proportional: bool = False
    r_member: bool = False
    coefficients: list[float] = field(default_factory=list)
    phases: list[float] = field(default_factory=list)
    translation: list[float] = field(default_factory=list)
    deviations: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "support": self.support,
            "proportional": self.proportional,
            "r_member": self.r_member,
            "coefficients": self.coefficients,
            "phases": self.phases,
            "translation": self.translation,
            "deviations": self.deviations,
        }


@dataclass
class GroundStateResult:
    """
    경사 흐름 결과

    bs_residual 은 최소화 결과에서는 자신의 승수 ω_i 에 대한
    ‖Δu_i − ω_i u_i + N_i‖ 이고, 속박 상태로 변환한 뒤에는 ω = 1 에 대한 값입니다.
    """
    profile: FieldVec
    multipliers: np.ndarray
    bs_residual: np.ndarray
    report: FunctionalReport
    iterations: int = 0
    converged: bool = False
    is_bound_state: bool = False
    classification: StructureTags | None = None
    history: list[dict[str, float]] = field(default_factory=list)

    HISTORY_HEADER: ClassVar[tuple[str, ...]] = ("iteration", "objective", "constraint_residual", "bs_residual", "tau")

    def to_dict(self) -> dict[str, Any]:
        return {
            "grid": self.profile.grid.to_dict(),
            "M": self.profile.M,
            "multipliers": [None if np.isnan(w) else float(w) for w in self.multipliers],
            "bs_residual": [float(r) for r in self.bs_residual],
            "report": self.report.to_dict(),
            "iterations": self.iterations,
            "converged": self.converged,
            "is_bound_state": self.is_bound_state,
            "classification": self.classification.to_dict() if self.classification else None,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=indent)

    def history_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=self.HISTORY_HEADER)
            writer.writeheader()
            writer.writerows(self.history)
        return path


# =============================================================================
# 초기 필드
# =============================================================================

def _seed_amplitudes(params: ModelParams, witness: P1Witness) -> np.ndarray:
    """여러 성분을 함께 채우는 공통 윤곽 계수를 우선 사용"""
    shared = shared_profile_witness(params.coupling)
    chosen = shared if shared.found else witness
    return np.asarray(chosen.coefficients, dtype=float) ** (1.0 / (params.p + 1))


def initial_field(grid: GridSpec, params: ModelParams, cfg: FlowConfig, witness: P1Witness) -> FieldVec:
    """
    초기 필드 생성

    - gaussian / sech-profile: (P1) 증거 계수로 성분 진폭을 정한 공통 윤곽
    - random: 공통 가우시안 윤곽, 성분별 진폭 U(0.2, 1) 과 무작위 위상
    - user: cfg.user_field
    """
    init = Initializer(cfg.initializer)
    shape = (-1, *([1] * grid.dim))
    r2 = grid.radius_squared

    if init is Initializer.USER:
        if cfg.user_field is None:
            raise ParameterError("initializer=user 에는 user_field 가 필요합니다")
        if cfg.user_field.grid != grid or cfg.user_field.M != params.M:
            raise ParameterError("user_field 의 격자 또는 성분 수가 맞지 않습니다")
        return cfg.user_field

    if init is Initializer.RANDOM:
        rng = np.random.default_rng(cfg.seed)
        amplitudes = rng.uniform(0.2, 1.0, size=params.M) * np.exp(1j * rng.uniform(0, 2 * np.pi, size=params.M))
        U = FieldVec(amplitudes.reshape(shape) * np.exp(-r2 / 2), grid)
        if report(U, params).J > 0:
            return U
        logger.warning("무작위 초기 필드의 J ≤ 0: (P1) 증거 계수로 대체합니다")
        seeded = _seed_amplitudes(params, witness) * np.exp(1j * rng.uniform(0, 2 * np.pi, size=params.M))
        return FieldVec(seeded.reshape(shape) * np.exp(-r2 / 2), grid)

    amplitudes = _seed_amplitudes(params, witness)
    if init is Initializer.SECH_PROFILE:
        envelope = 1.0 / np.cosh(np.sqrt(r2))
    else:
        envelope = np.exp(-r2 / 2)
    return FieldVec(amplitudes.reshape(shape) * envelope, grid)


# =============================================================================
# 경사 흐름 공통부
# =============================================================================

def _etd_step(data: np.ndarray, grid: GridSpec, params: ModelParams, tau: float,
              omega: np.ndarray, shift_extra: float) -> np.ndarray:
    """사영 흐름 u_t = Δu + N(U) − ωU 의 ETD1 한 단계"""
    shape = (-1, *([1] * grid.dim))
    omega = np.nan_to_num(omega, nan=0.0)
    nonlinear = phase_rate(data, params) * data
    amplitude = float(np.max(np.abs(data))) ** (2 * params.p)
    alpha = (shift_extra + float(np.max(np.abs(omega)))
             + (2 * params.p + 1) * float(np.max(np.abs(params.coupling))) * params.M * amplitude)
    force = nonlinear + (alpha - omega.reshape(shape)) * data
    L = grid.k_squared + alpha
    decay = np.exp(-tau * L)
    spec = decay * fft_field(data, grid) - np.expm1(-tau * L) / L * fft_field(force, grid)
    return ifft_field(spec, grid)


def _projected_residual(data: np.ndarray, grid: GridSpec, params: ModelParams, omega: np.ndarray) -> float:
    """‖ΔU + N(U) − ωU‖ (전체 L²)"""
    shape = (-1, *([1] * grid.dim))
    lap = ifft_field(-grid.k_squared * fft_field(data, grid), grid)
    r = lap + phase_rate(data, params) * data - np.nan_to_num(omega, nan=0.0).reshape(shape) * data
    return float(np.sqrt(component_masses(r, grid).sum()))


def _finalize(data: np.ndarray, grid: GridSpec, params: ModelParams, omega_fixed: float | None,
              iterations: int, converged: bool, history: list[dict]) -> GroundStateResult:
    U = FieldVec(data, grid)
    r = report(U, params)
    omega = multiplier_estimate(U, params)
    reference = omega if omega_fixed is None else np.full(U.M, omega_fixed)
    return GroundStateResult(
        profile=U,
        multipliers=omega,
        bs_residual=bound_state_residual(U, params, reference),
        report=r,
        iterations=iterations,
        converged=converged,
        history=history,
    )


def _run_flow(data: np.ndarray, grid: GridSpec, params: ModelParams, cfg: FlowConfig,
              project, objective, omega_of, label: str, extra_residual=None) -> GroundStateResult:
    """
    공통 반복 루프

    Args:
        project: 제약 집합으로 되돌리는 사상
        objective: 감소시킬 목적 함수 (FunctionalReport → float)
        omega_of: 현재 반복의 승수 (FunctionalReport → 배열)
        extra_residual: 추가 수렴 조건 잔차 (배열 → float)
    """
    data = project(data)
    r = report_from_data(data, grid, params)
    value = objective(r)
    tau = cfg.tau
    history: list[dict[str, float]] = []

    for iteration in range(1, cfg.max_iter + 1):
        omega = omega_of(r)
        residual = _projected_residual(data, grid, params, omega)

        for _ in range(MAX_BACKTRACK):
            try:
                candidate = project(_etd_step(data, grid, params, tau, omega, cfg.shift))
                r_new = report_from_data(candidate, grid, params)
            except FunctionalError as e:
                raise FlowDivergenceError(f"{label}: 유한하지 않은 값이 발생했습니다 ({e.functional})") from e
            if not np.all(np.isfinite(candidate)) or np.max(np.abs(candidate)) > DIVERGENCE_AMPLITUDE:
                raise FlowDivergenceError(f"{label}: 필드가 발산했습니다 (반복 {iteration})")
            new_value = objective(r_new)
            if new_value <= value + ENERGY_SLACK * max(1.0, abs(value)):
                break
            tau /= 2
            logger.debug("%s: 목적 함수 증가로 τ 절반 → %.3e", label, tau)
        else:
            partial = _finalize(data, grid, params, None, iteration, False, history)
            raise ConvergenceError(f"{label}: τ 를 줄여도 목적 함수가 감소하지 않습니다", result=partial)

        decrease = (value - new_value) / max(1.0, abs(value))
        data, r, value = candidate, r_new, new_value
        constraint = extra_residual(data) if extra_residual else 0.0
        history.append({
            "iteration": iteration,
            "objective": value,
            "constraint_residual": constraint,
            "bs_residual": residual,
            "tau": tau,
        })
        if iteration % cfg.log_every == 0:
            logger.info("%s 반복 %d: 목적=%.12g, 잔차=%.2e, τ=%.2e", label, iteration, value, residual, tau)

        if residual < cfg.tol and decrease < cfg.tol and constraint < CONSTRAINT_TOLERANCE:
            logger.info("%s 수렴: 반복 %d, 잔차 %.2e", label, iteration, residual)
            return _finalize(data, grid, params, None, iteration, True, history)
        tau = min(cfg.tau, tau * 1.5)

    partial = _finalize(data, grid, params, None, cfg.max_iter, False, history)
    raise ConvergenceError(f"{label}: {cfg.max_iter} 회 안에 수렴하지 못했습니다", result=partial)


def _require_witness(params: ModelParams) -> P1Witness:
    witness = p1_witness(params.coupling)
    if not witness.found:
        raise ParameterError("(P1) 증거를 찾지 못했습니다: J > 0 인 필드가 필요합니다")
    return witness


def _check_grid(grid: GridSpec, params: ModelParams) -> None:
    if grid.dim != params.dim:
        raise ParameterError(f"격자 차원이 파라미터와 다릅니다: {grid.dim} ≠ {params.dim}")


# =============================================================================
# 공개 연산
# =============================================================================

def minimize(constraint: ConstraintSpec, params: ModelParams, cfg: FlowConfig) -> GroundStateResult:
    """
    질량 제약 위의 에너지 최소화 (아임계 영역)

    반환값은 속박 상태로 변환하기 전의 최소화 결과입니다 (승수 ω ≠ 1 일 수 있음).

    Raises:
        RegimeError: p ≥ 2/N
        ParameterError: (P1) 증거 없음, 또는 제약 성분 수 불일치
        ConvergenceError: 반복 한도 초과 (부분 결과 포함)
        FlowDivergenceError: 발산 또는 0 으로 붕괴
    """
    if params.regime is not Regime.SUBCRITICAL:
        raise RegimeError(f"질량 제약 최소화는 p < 2/N 에서만 유효합니다: p={params.p}, N={params.dim}")
    if isinstance(constraint, PerComponentMass) and len(constraint.values) != params.M:
        raise ParameterError(f"성분별 질량 목표 수가 M 과 다릅니다: {len(constraint.values)} ≠ {params.M}")
    grid = cfg.grid
    _check_grid(grid, params)
    witness = _require_witness(params)

    U0 = initial_field(grid, params, cfg, witness)
    logger.info("질량 제약 최소화 시작: %s, p=%g, M=%d", constraint.to_dict(), params.p, params.M)
    return _run_flow(
        np.array(U0.data), grid, params, cfg,
        project=lambda d: constraint.normalize(d, grid),
        objective=lambda r: r.E,
        omega_of=constraint.multipliers,
        label="minimize",
        extra_residual=lambda d: constraint.residual(d, grid),
    )


def _nehari_projection(params: ModelParams, grid: GridSpec):
    """tU 가 I = J 를 만족하도록 t^{2p} = I/J"""
    def project(data: np.ndarray) -> np.ndarray:
        r = report_from_data(data, grid, params)
        if not r.J > 0:
            raise FlowDivergenceError(f"Nehari 사영에는 J > 0 이 필요합니다: J={r.J:.3e}")
        return data * (r.I / r.J) ** (1 / (2 * params.p))
    return project


def nehari_ground_state(params: ModelParams, cfg: FlowConfig) -> GroundStateResult:
    """
    Nehari 집합 {I = J} 위에서 S 를 줄이는 흐름으로 기저 상태 계산

    흐름 u_t = Δu − u + N(U) 뒤에 진폭을 t^{2p} = I/J 로 맞춥니다.
    모든 영역에서 유효하며 p ≥ 2/N 에서 쓰는 경로입니다.
    """
    grid = cfg.grid
    _check_grid(grid, params)
    witness = _require_witness(params)
    U0 = initial_field(grid, params, cfg, witness)
    project = _nehari_projection(params, grid)
    logger.info("Nehari 흐름 시작: p=%g, M=%d (%s)", params.p, params.M, params.regime.value)

    result = _run_flow(
        np.array(U0.data), grid, params, cfg,
        project=project,
        objective=lambda r: r.S,
        omega_of=lambda r: np.ones(params.M),
        label="nehari",
        extra_residual=lambda d: _nehari_gap(d, grid, params),
    )
    result = _finalize(result.profile.data, grid, params, 1.0, result.iterations, True, result.history)
    result.is_bound_state = _residual_small(result)
    return result


def _nehari_gap(data: np.ndarray, grid: GridSpec, params: ModelParams) -> float:
    r = report_from_data(data, grid, params)
    return abs(r.I - r.J) / max(r.I, np.finfo(float).tiny)


def scalar_ground_state(grid: GridSpec, p: float, cfg: FlowConfig | None = None) -> ComponentField:
    """스칼라 기저 상태 Q (1차원은 닫힌 형태, 그 외는 Nehari 흐름)"""
    if grid.dim == 1:
        return reference_soliton(grid, p)
    cfg = replace(cfg or FlowConfig(), grid=grid)
    result = nehari_ground_state(ModelParams.scalar(p, dim=grid.dim), cfg)
    return result.profile.component(0)


def _residual_small(result: GroundStateResult, tolerance: float = BOUND_STATE_RESIDUAL_TOLERANCE) -> bool:
    residual = np.asarray(result.bs_residual, dtype=float)
    return bool(np.all(np.isfinite(residual)) and np.max(residual) <= tolerance)


def rescale_to_bound_state(
    result: GroundStateResult,
    params: ModelParams,
    q_scalar: ComponentField | None = None,
    classify: bool = True,
) -> GroundStateResult:
    """
    u_new(x) = ω^{−1/(2p)}·u(x/√ω) 로 Δu − u + N(U) = 0 의 해로 변환

    승수가 1e−6 이상 다르면 속박 상태로 만들 수 없으므로 입력을
    is_bound_state=False 로 표시해 돌려줍니다. 변환 뒤 잔차가
    BOUND_STATE_RESIDUAL_TOLERANCE 를 넘어도 is_bound_state=False 입니다.

    Raises:
        NotABoundStateError: 공통 승수 ω ≤ 0 이거나 정의되지 않을 때
    """
    omega = np.asarray(result.multipliers, dtype=float)
    live = omega[~np.isnan(omega)]
    if live.size == 0:
        raise NotABoundStateError("정의된 승수가 없습니다")
    w = float(np.mean(live))
    if np.max(np.abs(live - w)) > MULTIPLIER_SPREAD_TOLERANCE * max(1.0, abs(w)):
        logger.warning("승수가 서로 다릅니다 %s: 스케일 변환으로 속박 상태를 얻을 수 없습니다", live.tolist())
        return replace(result, is_bound_state=False)
    if w <= 0:
        raise NotABoundStateError(f"승수가 양수가 아닙니다: ω={w:.6g}")

    grid = result.profile.grid
    if abs(w - 1.0) <= 1e-12:
        U = result.profile
    else:
        U = resample_scaled(result.profile, 1.0 / math.sqrt(w), 0.0) * w ** (-1 / (2 * params.p))

    rescaled = _finalize(U.data, grid, params, 1.0, result.iterations, result.converged, result.history)
    rescaled.is_bound_state = _residual_small(rescaled)
    if not rescaled.is_bound_state:
        logger.warning("변환 후 잔차가 큽니다: %s", np.round(rescaled.bs_residual, 12).tolist())
    if classify:
        q = q_scalar if q_scalar is not None else scalar_ground_state(grid, params.p)
        rescaled.classification = classify_structure(U, params, q)
    logger.info("속박 상태 변환: ω=%.10g → 잔차 %s", w, np.round(rescaled.bs_residual, 12).tolist())
    return rescaled


def classify_structure(
    U: FieldVec,
    params: ModelParams,
    Q_scalar: ComponentField,
    mass_floor_ratio: float = 1e-10,
) -> StructureTags:
    """
    구조 분류

    - X = {i : M_i > mass_floor}
    - proportional: 가장 무거운 성분 윤곽 φ 에 대해 ‖u_i − ⟨φ,u_i⟩φ‖/‖u_i‖ < 1e−4
    - R 소속: 공통 평행이동과 성분별 위상을 맞춘 뒤 u_i ≈ a_i·Q 의 상대 편차 < 1e−4
    """
    grid = U.grid
    masses = component_masses(U.data, grid)
    total = float(masses.sum())
    support = [i for i in range(U.M) if masses[i] > mass_floor_ratio * total] if total > 0 else []
    if not support:
        return StructureTags()

    lead = max(support, key=lambda i: masses[i])
    phi = U.data[lead] / math.sqrt(masses[lead])
    proportional = True
    for i in support:
        c = np.vdot(phi, U.data[i]) * grid.cell_volume
        rest = U.data[i] - c * phi
        if math.sqrt(np.sum(np.abs(rest) ** 2) * grid.cell_volume / masses[i]) >= STRUCTURE_TOLERANCE:
            proportional = False

    q = Q_scalar.values
    q_mass = float(np.sum(np.abs(q) ** 2) * grid.cell_volume)
    coefficients = np.zeros(U.M)
    coefficients[support] = np.sqrt(masses[support] / q_mass)
    reference = FieldVec(coefficients.reshape(-1, *([1] * grid.dim)) * q, grid)
    alignment = orbital_distance(U, reference)

    aligned = shift(reference, alignment.translation).scaled(np.exp(1j * np.asarray(alignment.phases)))
    deviations = np.zeros(U.M)
    for i in support:
        diff = U.data[i] - aligned.data[i]
        deviations[i] = math.sqrt(np.sum(np.abs(diff) ** 2) * grid.cell_volume / masses[i])
    r_member = bool(np.all(deviations[support] < STRUCTURE_TOLERANCE))

    return StructureTags(
        support=support,
        proportional=proportional,
        r_member=r_member,
        coefficients=coefficients.tolist(),
        phases=list(alignment.phases),
        translation=list(alignment.translation),
        deviations=deviations.tolist(),
    )


def ground_state(params: ModelParams, cfg: FlowConfig, q_scalar: ComponentField | None = None) -> GroundStateResult:
    """
    영역에 맞는 경로로 (BS) 의 기저 상태 계산

    아임계: TotalMass(mass_guess) 최소화 후 스케일 변환, 그 외: Nehari 흐름
    """
    if params.regime is Regime.SUBCRITICAL:
        result = minimize(TotalMass(cfg.mass_guess), params, cfg)
        return rescale_to_bound_state(result, params, q_scalar=q_scalar)
    result = nehari_ground_state(params, cfg)
    if q_scalar is not None or cfg.grid.dim == 1:
        q = q_scalar if q_scalar is not None else reference_soliton(cfg.grid, params.p)
        result.classification = classify_structure(result.profile, params, q)
    return result


def mu_of_groundstate(params: ModelParams, cfg: FlowConfig) -> float:
    """기저 상태 질량 μ = M(Q)"""
    if params.regime is not Regime.SUBCRITICAL:
        raise RegimeError(f"μ 는 아임계 영역에서 계산합니다: p={params.p}, N={params.dim}")
    result = ground_state(params, cfg)
    return result.report.M
