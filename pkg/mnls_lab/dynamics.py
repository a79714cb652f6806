"""
Dynamics - Strang 분할 스펙트럼 적분기로 M-NLS 시간 전개

    i ∂t v_i + Δv_i + Σ_j k_ij |v_j|^{p+1}|v_i|^{p−1}v_i = 0

주요 기능:
    - kinetic_step: 푸리에 공간에서 정확한 자유 전개 e^{−i|k|²dt}
    - nonlinear_phase_step: |v_i| 가 보존되므로 정확한 위상 회전
    - strang_step: 반 운동 / 전체 비선형 / 반 운동
    - evolve: 균일 기록, 에너지 점프 기반 dt 조정, 폭발/경계 플래그

사용 예시:
    from mnls_lab.dynamics import StepperConfig, evolve

    cfg = StepperConfig(dt=1e-3, t_end=5.0, record_stride=50)
    trace = evolve(V0, params, cfg)
    print(trace.summary_dict())
    trace.to_csv("trace.csv")
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .errors import FunctionalError, ParameterError
from .field_core import (
    FieldVec,
    GridSpec,
    fft_field,
    ifft_field,
    tail_mass,
)
from .functionals import ModelParams, phase_rate, report_from_data

logger = logging.getLogger(__name__)


# =============================================================================
# 상수 정의
# =============================================================================

DEFAULT_DT = 1e-3
DEFAULT_DT_MIN = 1e-7
DEFAULT_TAIL_TOLERANCE = 1e-3
DEFAULT_RESOLUTION_TOLERANCE = 1e-4

# 깨끗한 기록 구간이 이만큼 이어지면 dt 를 두 배로 되돌림
REGROW_AFTER_CLEAN = 4

# 에너지 점프 척도의 하한 계수: max(|E|, floor·(T + |J|/(2p+2)))
ENERGY_SCALE_FLOOR = 1e-2

# 2/3 Nyquist 위 스펙트럼 질량 비율로 해상도 상실 판정
RESOLUTION_RATIO = 2.0 / 3.0


class BlowupReason(str, Enum):
    """폭발 판정 근거"""
    GRADIENT = "gradient"
    DT_MIN = "dt_min"
    RESOLUTION = "resolution"
    NON_FINITE = "non_finite"


# =============================================================================
# 데이터 클래스
# =============================================================================

@dataclass
class StepperConfig:
    """
    시간 적분 설정

    Attributes:
        dt: 기본 시간 간격
        t_end: 종료 시각
        dt_min: dt 하한 (도달하면 폭발로 판정)
        blowup_gradient_factor: ‖∇V‖ 가 초기값의 이 배수를 넘으면 폭발
        tail_tolerance: 경계 껍질 상대 질량 허용치
        record_stride: 기록 간격 (기본 dt 단위)
        energy_jump_tol: 한 단계 에너지 변화 허용치 (척도 대비)
        resolution_tolerance: 고주파 스펙트럼 질량 허용치
        adaptive: dt 조정 여부
    """
    dt: float = DEFAULT_DT
    t_end: float = 1.0
    dt_min: float = DEFAULT_DT_MIN
    blowup_gradient_factor: float = 1e3
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE
    record_stride: int = 10
    energy_jump_tol: float = 1e-5
    resolution_tolerance: float = DEFAULT_RESOLUTION_TOLERANCE
    adaptive: bool = True

    def __post_init__(self):
        if not (self.dt > self.dt_min > 0):
            raise ParameterError(f"dt > dt_min > 0 이어야 합니다: dt={self.dt}, dt_min={self.dt_min}")
        if not self.t_end > 0:
            raise ParameterError(f"t_end 는 양수여야 합니다: {self.t_end}")
        if int(self.record_stride) < 1:
            raise ParameterError(f"record_stride 는 1 이상이어야 합니다: {self.record_stride}")
        self.record_stride = int(self.record_stride)

    @property
    def record_interval(self) -> float:
        return self.dt * self.record_stride

    @classmethod
    def from_dict(cls, data: dict) -> "StepperConfig":
        return cls(**data)

    def to_dict(self) -> dict:
        return {
            "dt": self.dt,
            "t_end": self.t_end,
            "dt_min": self.dt_min,
            "blowup_gradient_factor": self.blowup_gradient_factor,
            "tail_tolerance": self.tail_tolerance,
            "record_stride": self.record_stride,
            "energy_jump_tol": self.energy_jump_tol,
            "resolution_tolerance": self.resolution_tolerance,
            "adaptive": self.adaptive,
        }


@dataclass
class EvolutionTrace:
    """시간 전개 기록 (기록 시각마다 한 행)"""
    times: list[float] = field(default_factory=list)
    masses: list[list[float]] = field(default_factory=list)
    kinetics: list[list[float]] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    pohozaev: list[float] = field(default_factory=list)
    action: list[float] = field(default_factory=list)
    potential: list[float] = field(default_factory=list)
    variance: list[float] = field(default_factory=list)
    gradient_norm: list[float] = field(default_factory=list)
    tail_mass: list[float] = field(default_factory=list)
    monitors: dict[str, list[float]] = field(default_factory=dict)
    blowup_detected: bool = False
    tail_violation: bool = False
    blowup_reason: str | None = None
    final_time: float = 0.0
    final_state: FieldVec | None = None
    dt_halvings: int = 0
    elapsed_sec: float = 0.0

    @property
    def orbital_distance(self) -> list[float] | None:
        return self.monitors.get("orbital_distance")

    def mass_drift(self) -> np.ndarray:
        """성분별 max_t |M_i(t) − M_i(0)| / M_i(0) (질량 0 성분은 절대값)"""
        m = np.asarray(self.masses)
        ref = np.where(m[0] > 0, m[0], 1.0)
        return np.max(np.abs(m - m[0]) / ref, axis=0)

    def energy_drift(self) -> float:
        e = np.asarray(self.energy)
        return float(np.max(np.abs(e - e[0])) / max(abs(e[0]), np.finfo(float).tiny))

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        M = len(self.masses[0]) if self.masses else 0
        header = ["t", "E", "H", "S", "J", "variance", "grad_norm", "tail_mass"]
        header += [f"M_{i + 1}" for i in range(M)] + [f"T_{i + 1}" for i in range(M)]
        header += list(self.monitors)
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            for j, t in enumerate(self.times):
                row = [t, self.energy[j], self.pohozaev[j], self.action[j], self.potential[j],
                       self.variance[j], self.gradient_norm[j], self.tail_mass[j]]
                row += list(self.masses[j]) + list(self.kinetics[j])
                row += [values[j] for values in self.monitors.values()]
                writer.writerow(row)
        return path

    def summary_dict(self) -> dict:
        summary = {
            "records": len(self.times),
            "final_time": self.final_time,
            "blowup_detected": self.blowup_detected,
            "blowup_reason": self.blowup_reason,
            "tail_violation": self.tail_violation,
            "dt_halvings": self.dt_halvings,
            "elapsed_sec": round(self.elapsed_sec, 3),
        }
        if self.times:
            summary.update({
                "mass_drift": self.mass_drift().tolist(),
                "energy_drift": self.energy_drift(),
                "max_gradient_norm": float(np.max(self.gradient_norm)),
                "max_tail_mass": float(np.max(self.tail_mass)),
            })
        for name, values in self.monitors.items():
            summary[f"max_{name}"] = float(np.max(values))
        return summary

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.summary_dict(), ensure_ascii=False, indent=indent)


# =============================================================================
# 부분 단계
# =============================================================================

def _kinetic_factor(grid: GridSpec, dt: float) -> np.ndarray:
    return np.exp(-1j * grid.k_squared * dt)


def _nonlinear_data(data: np.ndarray, params: ModelParams, dt: float) -> np.ndarray:
    rate = phase_rate(data, params)
    if not np.all(np.isfinite(rate)):
        raise FunctionalError("비선형 위상이 유한하지 않습니다", functional="nonlinear_phase")
    return np.exp(1j * dt * rate) * data


def kinetic_step(V: FieldVec, dt: float) -> FieldVec:
    """자유 전개 v̂ ↦ e^{−i|k|²dt}v̂"""
    grid = V.grid
    return FieldVec(ifft_field(_kinetic_factor(grid, dt) * fft_field(V.data, grid), grid), grid)


def nonlinear_phase_step(V: FieldVec, params: ModelParams, dt: float) -> FieldVec:
    """v_i ↦ exp(i·dt·Σ_j k_ij|v_j|^{p+1}|v_i|^{p−1})·v_i"""
    return FieldVec(_nonlinear_data(V.data, params, dt), V.grid)


class _StrangPropagator:
    """기록 구간마다 재사용하는 반 단계 운동 인자"""

    def __init__(self, grid: GridSpec, params: ModelParams):
        self.grid = grid
        self.params = params
        self._half: dict[float, np.ndarray] = {}

    def step(self, data: np.ndarray, dt: float) -> np.ndarray:
        half = self._half.get(dt)
        if half is None:
            half = self._half[dt] = _kinetic_factor(self.grid, dt / 2)
        grid = self.grid
        data = ifft_field(half * fft_field(data, grid), grid)
        data = _nonlinear_data(data, self.params, dt)
        return ifft_field(half * fft_field(data, grid), grid)


def strang_step(V: FieldVec, params: ModelParams, dt: float) -> FieldVec:
    """반 운동, 전체 비선형, 반 운동 (2차 정확도, 시간 가역)"""
    return FieldVec(_StrangPropagator(V.grid, params).step(V.data, dt), V.grid)


# =============================================================================
# 시간 전개
# =============================================================================

def _high_k_fraction(data: np.ndarray, grid: GridSpec, mask: np.ndarray) -> float:
    power = np.sum(np.abs(fft_field(data, grid)) ** 2, axis=0)
    total = float(power.sum())
    return float(power[mask].sum() / total) if total > 0 else 0.0


def _energy_scale(r, p: float) -> float:
    return max(abs(r.E), ENERGY_SCALE_FLOOR * (r.T + abs(r.J) / (2 * p + 2)))


def evolve(
    V0: FieldVec,
    params: ModelParams,
    cfg: StepperConfig,
    monitors: Mapping[str, Callable[[FieldVec], float]] | None = None,
) -> EvolutionTrace:
    """
    V0 에서 t_end 까지 전개 (또는 플래그가 설 때까지)

    기록은 균일 간격 cfg.record_interval 로 남깁니다. 한 단계 에너지 변화가
    허용치를 넘으면 그 구간을 dt/2 로 다시 계산하고, dt 가 dt_min 아래로
    내려가면 폭발로 판정합니다. 물리적 사건은 예외가 아니라 플래그로 보고합니다.
    """
    started = time.perf_counter()
    grid = V0.grid
    monitors = dict(monitors or {})
    trace = EvolutionTrace(monitors={name: [] for name in monitors})
    propagator = _StrangPropagator(grid, params)
    high_k = grid.high_k_mask(RESOLUTION_RATIO)

    n_records = max(1, int(round(cfg.t_end / cfg.record_interval)))
    interval = cfg.t_end / n_records
    base_substeps = cfg.record_stride

    def record(t: float, data: np.ndarray) -> None:
        r = report_from_data(data, grid, params)
        V = FieldVec(data, grid)
        trace.times.append(t)
        trace.masses.append(r.M_i)
        trace.kinetics.append(r.T_i)
        trace.energy.append(r.E)
        trace.pohozaev.append(r.H)
        trace.action.append(r.S)
        trace.potential.append(r.J)
        trace.gradient_norm.append(float(np.sqrt(r.T)))
        trace.tail_mass.append(tail_mass(V))
        density = np.sum(np.abs(data) ** 2, axis=0)
        trace.variance.append(float(np.sum(grid.radius_squared * density) * grid.cell_volume))
        for name, fn in monitors.items():
            trace.monitors[name].append(float(fn(V)))

    data = np.array(V0.data)
    t = 0.0
    record(t, data)
    grad0 = trace.gradient_norm[0]
    trace.final_state = V0

    if trace.tail_mass[0] > cfg.tail_tolerance:
        logger.warning("초기 필드의 경계 질량이 허용치를 넘습니다: %.2e", trace.tail_mass[0])
        trace.tail_violation = True
        trace.elapsed_sec = time.perf_counter() - started
        return trace

    level = 0
    clean = 0
    for j in range(1, n_records + 1):
        start = data
        while True:
            substeps = base_substeps * 2 ** level
            dt = interval / substeps
            work = start
            r_prev = report_from_data(work, grid, params)
            jumped = False
            try:
                for _ in range(substeps):
                    work = propagator.step(work, dt)
                    if not cfg.adaptive:
                        continue
                    r_next = report_from_data(work, grid, params)
                    if abs(r_next.E - r_prev.E) > cfg.energy_jump_tol * _energy_scale(r_prev, params.p):
                        jumped = True
                        break
                    r_prev = r_next
            except FunctionalError:
                trace.blowup_detected = True
                trace.blowup_reason = BlowupReason.NON_FINITE.value
                break
            if not jumped:
                break
            if _high_k_fraction(work, grid, high_k) > cfg.resolution_tolerance:
                trace.blowup_detected = True
                trace.blowup_reason = BlowupReason.RESOLUTION.value
                break
            if dt / 2 < cfg.dt_min:
                trace.blowup_detected = True
                trace.blowup_reason = BlowupReason.DT_MIN.value
                break
            level += 1
            clean = 0
            trace.dt_halvings += 1
            logger.debug("에너지 점프로 dt 절반: t=%.4f, dt=%.3e", t, dt / 2)

        if trace.blowup_detected:
            break

        data = work
        t = j * interval
        clean += 1
        if level > 0 and clean >= REGROW_AFTER_CLEAN:
            level -= 1
            clean = 0

        record(t, data)
        trace.final_state = FieldVec(data, grid)
        trace.final_time = t

        if grad0 > 0 and trace.gradient_norm[-1] > cfg.blowup_gradient_factor * grad0:
            trace.blowup_detected = True
            trace.blowup_reason = BlowupReason.GRADIENT.value
        elif _high_k_fraction(data, grid, high_k) > cfg.resolution_tolerance:
            trace.blowup_detected = True
            trace.blowup_reason = BlowupReason.RESOLUTION.value
        if trace.tail_mass[-1] > cfg.tail_tolerance:
            trace.tail_violation = True
        if trace.blowup_detected or trace.tail_violation:
            break
        if j % max(1, n_records // 10) == 0:
            logger.info("t=%.3f  E=%.10g  H=%.6g  dt=%.2e", t, trace.energy[-1], trace.pohozaev[-1], dt)

    if trace.blowup_detected:
        logger.info("폭발 판정 (%s): t≈%.4f", trace.blowup_reason, trace.final_time)
    if trace.tail_violation:
        logger.warning("경계 질량 초과로 전개 중단: t=%.4f", trace.final_time)
    trace.elapsed_sec = time.perf_counter() - started
    return trace

