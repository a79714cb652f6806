"""
Diagnostics - 분산, Virial 잔차, 대칭 궤도까지의 거리

주요 기능:
    - variance: Σ_i ∫|x|²|v_i|² (중심 좌표)
    - virial_residual: 분산의 2계 차분과 8H 비교
    - orbital_distance: 위상 θ_i 와 공통 평행이동 y 를 맞춘 H¹ 거리
    - family_distance / rotation_family: 연속 기저 상태족까지의 거리

사용 예시:
    from mnls_lab.diagnostics import orbital_distance, variance

    alignment = orbital_distance(V, Q)
    print(alignment.translation, alignment.phases, alignment.distance)
    print(variance(V))
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import GridError, OrbitalError, VirialError
from .field_core import (
    ComponentField,
    FieldVec,
    component_kinetics,
    component_masses,
    fft_field,
    shift,
    spectral_weight,
    tail_mass,
)

if TYPE_CHECKING:
    from .dynamics import EvolutionTrace

logger = logging.getLogger(__name__)


# =============================================================================
# 상수 정의
# =============================================================================

VARIANCE_TAIL_WARNING = 1e-6
STRIDE_TOLERANCE = 1e-9
DEFAULT_FAMILY_SAMPLES = 64
NEWTON_MAX_ITER = 30


# =============================================================================
# 데이터 클래스
# =============================================================================

@dataclass
class OrbitalAlignment:
    """
    궤도 정렬 결과

    Attributes:
        translation: 공통 평행이동 y (축별)
        phases: 성분별 위상 θ_i
        distance: ‖V − e^{iθ_i}Q_i(· + y)‖_{H¹}
    """
    translation: tuple[float, ...]
    phases: tuple[float, ...]
    distance: float

    def to_dict(self) -> dict:
        return {
            "translation": list(self.translation),
            "phases": list(self.phases),
            "distance": self.distance,
        }


# =============================================================================
# 기본 관측량
# =============================================================================

def h1_norm(V: FieldVec) -> float:
    """‖V‖_{H¹} = (M + T)^{1/2}"""
    return float(np.sqrt(component_masses(V.data, V.grid).sum() + component_kinetics(V.data, V.grid).sum()))


def variance(V: FieldVec) -> float:
    """Σ_i ∫|x|²|v_i|²"""
    measured = tail_mass(V)
    if measured > VARIANCE_TAIL_WARNING:
        logger.warning("경계 질량이 무시할 수 없어 분산을 신뢰하기 어렵습니다: tail=%.2e", measured)
    density = np.sum(np.abs(V.data) ** 2, axis=0)
    return float(np.sum(V.grid.radius_squared * density) * V.grid.cell_volume)


def _uniform_stride(times: np.ndarray) -> float:
    if times.size < 3:
        raise VirialError(f"기록 시각이 3개 이상 필요합니다: {times.size}개")
    steps = np.diff(times)
    dt = float(steps[0])
    if dt <= 0 or np.max(np.abs(steps - dt)) > STRIDE_TOLERANCE * max(1.0, abs(dt)):
        raise VirialError("기록 간격이 균일하지 않습니다")
    return dt


def variance_second_difference(trace: "EvolutionTrace") -> tuple[np.ndarray, np.ndarray]:
    """내부 시각 t_j 와 (v_{j+1} − 2v_j + v_{j−1})/Δt²"""
    times = np.asarray(trace.times, dtype=float)
    dt = _uniform_stride(times)
    v = np.asarray(trace.variance, dtype=float)
    return times[1:-1], (v[2:] - 2 * v[1:-1] + v[:-2]) / dt ** 2


def virial_residual(trace: "EvolutionTrace") -> float:
    """max_j |Δ²v/Δt² − 8H(t_j)| / (1 + |8H(t_j)|)"""
    _, d2 = variance_second_difference(trace)
    eight_h = 8 * np.asarray(trace.pohozaev, dtype=float)[1:-1]
    return float(np.max(np.abs(d2 - eight_h) / (1 + np.abs(eight_h))))


# =============================================================================
# 궤도 거리
# =============================================================================

def _as_fieldvec(Q: FieldVec | ComponentField) -> FieldVec:
    return Q if isinstance(Q, FieldVec) else FieldVec.from_components([Q])


class _CorrelationScore:
    """s(y) = Σ_i |c_i(y)|, c_i(y) = ⟨Q_i(· + y), v_i⟩_{H¹}"""

    def __init__(self, V: FieldVec, Qref: FieldVec):
        grid = V.grid
        self.grid = grid
        weight = 1.0 + grid.k_squared
        self.X = np.conj(fft_field(Qref.data, grid)) * fft_field(V.data, grid) * weight
        self.scale = spectral_weight(grid)
        self.k = grid.k_vectors

    def on_grid(self) -> np.ndarray:
        """모든 격자 이동 y_m = m·h 에서 c_i (shape (M, *grid.shape))"""
        return self.scale * np.fft.fftn(self.X, axes=self.grid.axes)

    def coefficients(self, y: np.ndarray) -> np.ndarray:
        phase = np.exp(-1j * sum(ka * ya for ka, ya in zip(self.k, y)))
        axes = tuple(range(1, self.grid.dim + 1))
        return self.scale * np.sum(self.X * phase, axis=axes)

    def derivatives(self, y: np.ndarray):
        """s, ∇s, ∇²s"""
        dim = self.grid.dim
        axes = tuple(range(1, dim + 1))
        phase = np.exp(-1j * sum(ka * ya for ka, ya in zip(self.k, y)))
        Xp = self.X * phase
        c = self.scale * np.sum(Xp, axis=axes)
        dc = [self.scale * np.sum(Xp * (-1j * ka), axis=axes) for ka in self.k]
        ddc = [[self.scale * np.sum(Xp * (-ka * kb), axis=axes) for kb in self.k] for ka in self.k]

        mod = np.abs(c)
        live = mod > 0
        s = float(mod.sum())
        grad = np.zeros(dim)
        hess = np.zeros((dim, dim))
        for a in range(dim):
            ra = np.real(np.conj(c) * dc[a])
            grad[a] = np.sum(ra[live] / mod[live])
            for b in range(dim):
                rb = np.real(np.conj(c) * dc[b])
                rab = np.real(np.conj(dc[a]) * dc[b] + np.conj(c) * ddc[a][b])
                hess[a, b] = np.sum(rab[live] / mod[live] - ra[live] * rb[live] / mod[live] ** 3)
        return s, grad, hess


def _subgrid_peak(score: np.ndarray, peak: tuple[int, ...]) -> np.ndarray:
    """축별 3점 이차 맞춤으로 최댓값 위치 보정 (격자 단위)"""
    offsets = np.zeros(score.ndim)
    for a, n in enumerate(score.shape):
        idx_minus, idx_plus = list(peak), list(peak)
        idx_minus[a] = (peak[a] - 1) % n
        idx_plus[a] = (peak[a] + 1) % n
        s_m, s_0, s_p = score[tuple(idx_minus)], score[peak], score[tuple(idx_plus)]
        curvature = s_m - 2 * s_0 + s_p
        if curvature < 0:
            offsets[a] = np.clip(0.5 * (s_m - s_p) / curvature, -0.5, 0.5)
    return offsets


def orbital_distance(V: FieldVec, Qref: FieldVec | ComponentField) -> OrbitalAlignment:
    """
    min_{θ_i, y} ‖V − e^{iθ_i}Q_i(· + y)‖_{H¹}

    y 는 H¹ 상호상관의 격자 최댓값에서 시작해 이차 맞춤과 Newton 반복으로
    다듬고, θ_i = arg c_i(y) 는 닫힌 형태로 구합니다.

    Raises:
        OrbitalError: 기준 필드가 0 일 때
    """
    Qref = _as_fieldvec(Qref)
    if V.grid != Qref.grid:
        raise GridError("궤도 거리는 같은 격자에서만 계산합니다")
    if V.M != Qref.M:
        raise OrbitalError(f"성분 수가 다릅니다: {V.M} ≠ {Qref.M}")
    if h1_norm(Qref) == 0.0:
        raise OrbitalError("기준 필드가 0 입니다")

    grid = V.grid
    correlation = _CorrelationScore(V, Qref)
    score = np.sum(np.abs(correlation.on_grid()), axis=0)
    peak = np.unravel_index(int(np.argmax(score)), score.shape)
    cells = np.array(peak, dtype=float) + _subgrid_peak(score, peak)
    cells = np.where(cells > np.array(grid.shape) / 2, cells - np.array(grid.shape), cells)
    h = np.array(grid.spacing)
    y = cells * h

    s_best = float(np.sum(np.abs(correlation.coefficients(y))))
    for _ in range(NEWTON_MAX_ITER):
        s, grad, hess = correlation.derivatives(y)
        if not np.all(np.linalg.eigvalsh(hess) < 0):
            break
        step = -np.linalg.solve(hess, grad)
        step = np.clip(step, -h, h)
        trial = y + step
        s_trial = float(np.sum(np.abs(correlation.coefficients(trial))))
        if s_trial < s_best - 1e-15 * max(1.0, s_best):
            break
        y, s_best = trial, max(s_trial, s_best)
        if np.all(np.abs(step) <= 1e-14 * (1 + np.abs(y))):
            break

    c = correlation.coefficients(y)
    phases = np.where(np.abs(c) > 0, np.angle(c), 0.0)
    aligned = shift(Qref, y).scaled(np.exp(1j * phases))
    distance = h1_norm(V - aligned)
    return OrbitalAlignment(
        translation=tuple(float(v) for v in y),
        phases=tuple(float(t) for t in phases),
        distance=distance,
    )


def rotation_family(Q: FieldVec | ComponentField) -> Callable[[float], FieldVec]:
    """α ↦ (cos α·Q, sin α·Q) (M = 2 연속 기저 상태족)"""
    q = _as_fieldvec(Q)
    if q.M != 1:
        raise OrbitalError(f"회전족에는 단일 성분 프로파일이 필요합니다: M={q.M}")

    def member(alpha: float) -> FieldVec:
        return FieldVec(np.concatenate([np.cos(alpha) * q.data, np.sin(alpha) * q.data]), q.grid)

    return member


def family_distance(
    V: FieldVec,
    family: Callable[[float], FieldVec],
    samples: int = DEFAULT_FAMILY_SAMPLES,
    interval: tuple[float, float] = (0.0, np.pi / 2),
) -> tuple[float, OrbitalAlignment]:
    """
    매개변수족 {family(α)} 까지의 궤도 거리 (하한 추정)

    등간격 표본에서 최솟값을 찾고 이웃 구간에서 유계 스칼라 최소화로 다듬습니다.

    Returns:
        (α, 해당 정렬 결과)
    """
    lo, hi = interval
    alphas = np.linspace(lo, hi, samples)
    results = [orbital_distance(V, family(a)) for a in alphas]
    distances = np.array([r.distance for r in results])
    j = int(np.argmin(distances))
    best_alpha, best = float(alphas[j]), results[j]

    left, right = alphas[max(j - 1, 0)], alphas[min(j + 1, samples - 1)]
    if right > left:
        refined = minimize_scalar(
            lambda a: orbital_distance(V, family(a)).distance,
            bounds=(left, right),
            method="bounded",
            options={"xatol": 1e-10},
        )
        candidate = orbital_distance(V, family(float(refined.x)))
        if candidate.distance < best.distance:
            best_alpha, best = float(refined.x), candidate
    return best_alpha, best


def orbital_monitor(Qref: FieldVec | ComponentField) -> Callable[[FieldVec], float]:
    """evolve 용 궤도 거리 모니터"""
    q = _as_fieldvec(Qref)
    return lambda V: orbital_distance(V, q).distance


def family_monitor(family: Callable[[float], FieldVec], samples: int = DEFAULT_FAMILY_SAMPLES) -> Callable[[FieldVec], float]:
    """evolve 용 족 거리 모니터"""
    return lambda V: family_distance(V, family, samples=samples)[1].distance
