"""
Functionals - M-NLS 변분 범함수와 파생 스칼라 계산

결합 계수 K = (k_ij), 거듭제곱 p 에 대해 다음 범함수를 격자 구적으로 계산합니다.

    M(U) = Σ‖u_i‖²                     질량
    T(U) = Σ‖∇u_i‖²                    운동 에너지
    J(U) = Σ_ij k_ij ∫|u_i|^{p+1}|u_j|^{p+1}
    I = M + T,  E = T/2 − J/(2p+2),  H = T − NpJ/(2p+2),  S = I/2 − J/(2p+2)

주요 기능:
    - ModelParams: p, K, N 검증과 영역(아임계/임계/초임계) 판정
    - report: 모든 범함수와 성분별 값 (JSON/CSV 직렬화)
    - action_profile / lambda_star: 질량 보존 스케일링 P(U, λ) 위의 작용
    - gn_quotient / gn_equality_rescale: 벡터값 Gagliardo-Nirenberg 몫
    - p1_witness: J > 0 인 배치가 존재하는지 탐색
    - multiplier_estimate / bound_state_residual: 라그랑주 승수와 (BS) 잔차

사용 예시:
    from mnls_lab.field_core import GridSpec, FieldVec, reference_soliton
    from mnls_lab.functionals import ModelParams, report

    grid = GridSpec.cubic(dim=1, n=1024, L=40.0)
    params = ModelParams.scalar(p=1.0)
    Q = FieldVec.from_components([reference_soliton(grid, p=1.0)])
    print(report(Q, params).to_json())
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import ClassVar, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.sparse.csgraph import connected_components

from .errors import FunctionalError, LambdaStarError, ParameterError, RegimeError
from .field_core import (
    FieldVec,
    GridSpec,
    component_kinetics,
    component_masses,
    fft_field,
    ifft_field,
    resample_scaled,
)

logger = logging.getLogger(__name__)


# =============================================================================
# 상수 정의
# =============================================================================

REGIME_TOLERANCE = 1e-12
ROW_SUM_TOLERANCE = 1e-12
MULTIPLIER_MASS_FLOOR_RATIO = 1e-10

LAMBDA_MIN = 1e-3
LAMBDA_MAX = 1e3
LAMBDA_STAR_RESIDUAL = 1e-8

# (P1) 탐색: 격자 해상도와 무작위 표본 수
WITNESS_GRID_LEVELS = 8
WITNESS_RANDOM_SAMPLES = 2000


class Regime(str, Enum):
    """p 와 임계 지수 2/N 의 관계"""
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"
    SUPERCRITICAL = "supercritical"


class WitnessKind(str, Enum):
    """(P1) 증거 종류"""
    DISJOINT_SUPPORT = "disjoint-support"
    SHARED_PROFILE = "shared-profile"
    NONE = "none"


# =============================================================================
# 데이터 클래스
# =============================================================================

@dataclass(frozen=True, eq=False)
class ModelParams:
    """
    모델 파라미터

    Attributes:
        p: 비선형 거듭제곱 (0 < p < 4/(N−2)⁺)
        coupling: 대칭 결합 행렬 K (M×M)
        dim: 공간 차원 N
        reg_eps: |u|^{p−1} 의 u=0 근방 정규화 (0 이면 0 값 규약)
    """
    p: float
    coupling: np.ndarray
    dim: int = 1
    reg_eps: float = 0.0

    def __post_init__(self):
        K = np.array(self.coupling, dtype=float)
        if K.ndim == 0:
            K = K.reshape(1, 1)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ParameterError(f"결합 행렬은 정사각 행렬이어야 합니다: shape={K.shape}")
        if not np.all(np.isfinite(K)):
            raise ParameterError("결합 행렬에 유한하지 않은 값이 있습니다")
        if not np.array_equal(K, K.T):
            raise ParameterError("결합 행렬이 대칭이 아닙니다 (k_ij = k_ji 필요)")
        if self.dim not in (1, 2, 3):
            raise ParameterError(f"지원하지 않는 차원입니다: {self.dim}")
        if not (np.isfinite(self.p) and self.p > 0):
            raise ParameterError(f"p 는 양수여야 합니다: {self.p}")
        if self.dim > 2 and not self.p < 4 / (self.dim - 2):
            raise ParameterError(f"p 가 에너지 임계 지수 이상입니다: p={self.p}, N={self.dim}")
        if self.reg_eps < 0:
            raise ParameterError(f"reg_eps 는 음수일 수 없습니다: {self.reg_eps}")
        K.setflags(write=False)
        object.__setattr__(self, "coupling", K)
        object.__setattr__(self, "p", float(self.p))

    @classmethod
    def scalar(cls, p: float, dim: int = 1, k: float = 1.0) -> "ModelParams":
        return cls(p=p, coupling=np.array([[k]]), dim=dim)

    @classmethod
    def from_dict(cls, data: dict, dim: int = 1) -> "ModelParams":
        return cls(
            p=float(data["p"]),
            coupling=np.asarray(data.get("coupling", [[1.0]]), dtype=float),
            dim=int(data.get("dim", dim)),
            reg_eps=float(data.get("reg_eps", 0.0)),
        )

    @property
    def M(self) -> int:
        return self.coupling.shape[0]

    @property
    def critical_power(self) -> float:
        return 2.0 / self.dim

    @property
    def regime(self) -> Regime:
        if abs(self.p - self.critical_power) <= REGIME_TOLERANCE:
            return Regime.CRITICAL
        return Regime.SUBCRITICAL if self.p < self.critical_power else Regime.SUPERCRITICAL

    def with_coupling(self, coupling: np.ndarray) -> "ModelParams":
        return ModelParams(p=self.p, coupling=coupling, dim=self.dim, reg_eps=self.reg_eps)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "coupling": self.coupling.tolist(),
            "dim": self.dim,
            "reg_eps": self.reg_eps,
            "regime": self.regime.value,
        }


@dataclass
class FunctionalReport:
    """범함수 값 모음 (전체 및 성분별)"""
    M: float
    T: float
    J: float
    I: float
    E: float
    H: float
    S: float
    M_i: list[float] = field(default_factory=list)
    T_i: list[float] = field(default_factory=list)
    J_i: list[float] = field(default_factory=list)

    CSV_HEADER: ClassVar[tuple[str, ...]] = ("M", "T", "J", "I", "E", "H", "S")

    def to_dict(self) -> dict:
        return {
            "M": self.M, "T": self.T, "J": self.J, "I": self.I,
            "E": self.E, "H": self.H, "S": self.S,
            "M_i": list(self.M_i), "T_i": list(self.T_i), "J_i": list(self.J_i),
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=indent)

    def csv_row(self) -> list[float]:
        return [getattr(self, name) for name in self.CSV_HEADER]


@dataclass
class P1Witness:
    """
    (P1) 증거: J > 0 인 필드를 만드는 계수

    Attributes:
        kind: 증거 종류
        coefficients: 음이 아닌 계수 a (길이 M)
        value: 이차 형식 값 aᵀKa (disjoint-support 이면 k_ii)
        index: disjoint-support 증거의 성분 번호
    """
    kind: WitnessKind
    coefficients: tuple[float, ...] = ()
    value: float = 0.0
    index: int | None = None

    @property
    def found(self) -> bool:
        return self.kind is not WitnessKind.NONE

    def build_field(self, grid: GridSpec, p: float, width: float = 1.0) -> FieldVec:
        """증거에서 시험 필드 구성: |u_i| = a_i^{1/(p+1)}·φ (φ 는 가우시안)"""
        if not self.found:
            raise ParameterError("(P1) 증거가 없어 시험 필드를 만들 수 없습니다")
        phi = np.exp(-grid.radius_squared / (2 * width ** 2))
        amplitudes = np.asarray(self.coefficients, dtype=float) ** (1.0 / (p + 1))
        return FieldVec(amplitudes.reshape(-1, *([1] * grid.dim)) * phi, grid)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "coefficients": list(self.coefficients),
            "value": self.value,
            "index": self.index,
        }


# =============================================================================
# 비선형 항
# =============================================================================

def _abs_power(data: np.ndarray, exponent: float, reg_eps: float) -> np.ndarray:
    """|u|^exponent, u=0 에서 0 (reg_eps > 0 이면 (|u|²+ε²)^{exponent/2})"""
    modulus = np.abs(data)
    if reg_eps > 0:
        return (modulus ** 2 + reg_eps ** 2) ** (exponent / 2)
    if exponent >= 0:
        return modulus ** exponent
    out = np.zeros_like(modulus)
    nonzero = modulus > 0
    out[nonzero] = modulus[nonzero] ** exponent
    return out


def coupled_moduli(data: np.ndarray, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """(A_i, Σ_j k_ij A_j), A_i = |u_i|^{p+1}"""
    A = np.abs(data) ** (params.p + 1)
    return A, np.tensordot(params.coupling, A, axes=([1], [0]))


def phase_rate(data: np.ndarray, params: ModelParams) -> np.ndarray:
    """실수 위상 속도 V_i = Σ_j k_ij |u_j|^{p+1}|u_i|^{p−1}"""
    _, coupled = coupled_moduli(data, params)
    return coupled * _abs_power(data, params.p - 1, params.reg_eps)


def nonlinearity(U: FieldVec, params: ModelParams) -> FieldVec:
    """N_i(U) = Σ_j k_ij |u_j|^{p+1}|u_i|^{p−1}u_i"""
    _check_compatible(U, params)
    return FieldVec(phase_rate(U.data, params) * U.data, U.grid)


def _check_compatible(U: FieldVec, params: ModelParams) -> None:
    if U.M != params.M:
        raise ParameterError(f"성분 수가 결합 행렬과 다릅니다: M={U.M}, K={params.coupling.shape}")
    if U.grid.dim != params.dim:
        raise ParameterError(f"격자 차원이 파라미터와 다릅니다: {U.grid.dim} ≠ {params.dim}")


# =============================================================================
# 범함수
# =============================================================================

def report_from_data(data: np.ndarray, grid: GridSpec, params: ModelParams) -> FunctionalReport:
    """배열에서 직접 범함수 계산 (시간 적분 내부용)"""
    p, N = params.p, grid.dim
    M_i = component_masses(data, grid)
    T_i = component_kinetics(data, grid)
    A, coupled = coupled_moduli(data, params)
    axes = tuple(range(1, grid.dim + 1))
    J_i = np.sum(A * coupled, axis=axes) * grid.cell_volume

    for name, values in (("M", M_i), ("T", T_i), ("J", J_i)):
        if not np.all(np.isfinite(values)):
            raise FunctionalError(f"범함수 {name} 계산 중 유한하지 않은 값이 발생했습니다", functional=name)

    M, T, J = float(M_i.sum()), float(T_i.sum()), float(J_i.sum())
    q = J / (2 * p + 2)
    return FunctionalReport(
        M=M,
        T=T,
        J=J,
        I=M + T,
        E=T / 2 - q,
        H=T - N * p * q,
        S=(M + T) / 2 - q,
        M_i=M_i.tolist(),
        T_i=T_i.tolist(),
        J_i=J_i.tolist(),
    )


def report(U: FieldVec, params: ModelParams) -> FunctionalReport:
    """M, T, J, I, E, H, S 와 성분별 M_i, T_i, J_i"""
    _check_compatible(U, params)
    return report_from_data(U.data, U.grid, params)


def critical_identity_residual(U: FieldVec, params: ModelParams) -> float:
    """|2E − H| (p = 2/N 에서 대수적으로 0)"""
    if params.regime is not Regime.CRITICAL:
        raise RegimeError(f"임계 지수 p = 2/N 에서만 정의됩니다: p={params.p}, N={params.dim}")
    r = report(U, params)
    return abs(2 * r.E - r.H)


def dilation(U: FieldVec, lam: float, tail_tolerance: float | None = None) -> FieldVec:
    """질량 보존 스케일링 P(U, λ) = λ^{N/2}·U(λx)"""
    kwargs = {} if tail_tolerance is None else {"tail_tolerance": tail_tolerance}
    return resample_scaled(U, lam, U.grid.dim / 2, **kwargs)


def sigma_scaling(U: FieldVec, sigma: float, p: float) -> FieldVec:
    """U_σ(x) = σ^{1/p}·U(σx)"""
    return resample_scaled(U, sigma, 1.0 / p)


def action_profile(
    U: FieldVec,
    params: ModelParams,
    lambdas: Sequence[float],
) -> list[tuple[float, float, float]]:
    """(λ, S(P(U,λ)), H(P(U,λ))) 표"""
    rows = []
    for lam in lambdas:
        r = report(dilation(U, float(lam)), params)
        rows.append((float(lam), r.S, r.H))
    return rows


def action_slope(U: FieldVec, params: ModelParams, lam: float = 1.0, dlam: float = 1e-3) -> float:
    """
    dS(P(U,λ))/dλ 중앙 차분

    λ·dS/dλ = H(P(U,λ)) 가 성립합니다.
    """
    (_, s_minus, _), (_, s_plus, _) = action_profile(U, params, [lam - dlam, lam + dlam])
    return (s_plus - s_minus) / (2 * dlam)


def _action_along_dilation(r: FunctionalReport, params: ModelParams):
    """P(W, λ) 위의 g(λ), g'(λ) (M 고정, T ∝ λ², J ∝ λ^{Np})"""
    Np = params.dim * params.p
    c = r.J / (2 * params.p + 2)

    def g(lam: float) -> float:
        return r.M / 2 + lam ** 2 * r.T / 2 - lam ** Np * c

    def g_prime(lam: float) -> float:
        return lam * r.T - Np * lam ** (Np - 1) * c

    return g, g_prime


def lambda_star(W: FieldVec, params: ModelParams) -> float:
    """
    g(λ) = S(P(W, λ)) 의 최댓값 위치 λ*(W)

    황금분할 탐색 후 g′ 의 근으로 다듬습니다.

    Raises:
        RegimeError: p ≤ 2/N
        LambdaStarError: J(W) ≤ 0 이거나 [1e−3, 1e3] 안에서 구간을 잡지 못함
    """
    if params.regime is not Regime.SUPERCRITICAL:
        raise RegimeError(f"λ* 는 초임계 영역에서만 정의됩니다: p={params.p}, N={params.dim}")
    r = report(W, params)
    if r.J <= 0 or r.T <= 0:
        raise LambdaStarError(f"g(λ) 가 최댓값을 갖지 않습니다: J={r.J:.3e}, T={r.T:.3e}")

    g, g_prime = _action_along_dilation(r, params)

    factor = 2.0
    a, b, c = 1.0 / factor, 1.0, factor
    while not (g(b) >= g(a) and g(b) >= g(c)):
        if g(a) > g(b):
            a, b, c = a / factor, a, b
        else:
            a, b, c = b, c, c * factor
        if a < LAMBDA_MIN or c > LAMBDA_MAX:
            raise LambdaStarError(f"λ* 탐색 구간이 [{LAMBDA_MIN}, {LAMBDA_MAX}] 를 벗어났습니다")

    golden = minimize_scalar(lambda lam: -g(lam), bracket=(a, b, c), method="golden", tol=1e-10)
    lam = float(golden.x)
    if g_prime(a) > 0 > g_prime(c):
        lam = brentq(g_prime, a, c, xtol=1e-15, rtol=4 * np.finfo(float).eps)

    scale = lam * r.T + params.dim * params.p * lam ** (params.dim * params.p - 1) * r.J / (2 * params.p + 2)
    residual = abs(g_prime(lam)) / scale
    if residual > LAMBDA_STAR_RESIDUAL:
        raise LambdaStarError(f"λ* 잔차가 큽니다: |g′(λ*)| = {residual:.2e}")
    logger.debug("λ* = %.10f (잔차 %.2e)", lam, residual)
    return lam


def gn_quotient(W: FieldVec, params: ModelParams) -> float:
    """J(W) / (M^{p+1−Np/2}·T^{Np/2})"""
    r = report(W, params)
    if r.M == 0 or r.T == 0:
        raise FunctionalError(f"GN 몫이 정의되지 않습니다: M={r.M}, T={r.T}", functional="gn_quotient")
    Np = params.dim * params.p
    return r.J / (r.M ** (params.p + 1 - Np / 2) * r.T ** (Np / 2))


def gn_constant(Q: FieldVec, params: ModelParams) -> float:
    """기저 상태에서 평가한 최적 상수 C_M"""
    return gn_quotient(Q, params)


def gn_equality_rescale(W: FieldVec, params: ModelParams, Q_ref: FieldVec) -> FieldVec:
    """
    ν·W(ζx), ν = (J(Q)M(W)/(M(Q)J(W)))^{1/(2p)}, ζ = (ν²M(W)/M(Q))^{1/N}

    W 가 GN 등호를 만족하면 결과는 Q_ref 와 같은 질량과 J 를 갖습니다.
    """
    rW, rQ = report(W, params), report(Q_ref, params)
    if rW.M == 0 or rW.J <= 0:
        raise FunctionalError(f"재스케일에는 M(W) > 0, J(W) > 0 이 필요합니다: J={rW.J:.3e}", functional="J")
    p, N = params.p, params.dim
    nu = (rQ.J * rW.M / (rQ.M * rW.J)) ** (1 / (2 * p))
    zeta = (nu ** 2 * rW.M / rQ.M) ** (1 / N)
    logger.debug("GN 재스케일: ν=%.6g, ζ=%.6g", nu, zeta)
    return resample_scaled(W, zeta, 0.0) * nu


def weinstein_bound(W: FieldVec, params: ModelParams, lambda_g: float) -> float:
    """λ_G^{p/(p+1)}·J(W)^{1/(p+1)} (I(W) 의 하한)"""
    r = report(W, params)
    if r.J <= 0:
        raise FunctionalError(f"Weinstein 하한에는 J(W) > 0 이 필요합니다: {r.J:.3e}", functional="J")
    p = params.p
    return lambda_g ** (p / (p + 1)) * r.J ** (1 / (p + 1))


# =============================================================================
# 결합 구조
# =============================================================================

def _witness_candidates(M: int, rng: np.random.Generator) -> np.ndarray:
    """max a_i = 1 로 정규화한 음이 아닌 후보 벡터들"""
    levels = WITNESS_GRID_LEVELS if M <= 4 else 2
    grid = np.array(list(itertools.product(np.linspace(0, 1, levels + 1), repeat=M)))
    grid = grid[np.isclose(grid.max(axis=1), 1.0)]
    random = rng.uniform(0, 1, size=(WITNESS_RANDOM_SAMPLES, M))
    random /= random.max(axis=1, keepdims=True)
    return np.vstack([grid, random])


def p1_witness(K: np.ndarray, M: int | None = None, seed: int = 0) -> P1Witness:
    """
    (P1) 증거 탐색

    1) 양의 대각 원소 k_ii (한 성분만 0이 아닌 필드)
    2) 음이 아닌 a 에 대해 aᵀKa 최대화 (공통 윤곽 필드)

    찾지 못하면 kind = NONE 을 돌려줍니다 (P1 이 거짓이라는 뜻은 아님).
    """
    K = np.asarray(K, dtype=float)
    M = K.shape[0] if M is None else M
    if K.shape != (M, M):
        raise ParameterError(f"결합 행렬 크기가 M 과 다릅니다: {K.shape}, M={M}")

    diag = np.diag(K)
    i = int(np.argmax(diag))
    if diag[i] > 0:
        coefficients = tuple(1.0 if j == i else 0.0 for j in range(M))
        return P1Witness(WitnessKind.DISJOINT_SUPPORT, coefficients, float(diag[i]), index=i)

    return shared_profile_witness(K, seed=seed)


def shared_profile_witness(K: np.ndarray, seed: int = 0) -> P1Witness:
    """음이 아닌 a 중 aᵀKa 가 가장 큰 벡터 (양수일 때만 증거)"""
    K = np.asarray(K, dtype=float)
    candidates = _witness_candidates(K.shape[0], np.random.default_rng(seed))
    values = np.einsum("ni,ij,nj->n", candidates, K, candidates)
    best = int(np.argmax(values))
    if values[best] <= 0:
        return P1Witness(WitnessKind.NONE)
    return P1Witness(WitnessKind.SHARED_PROFILE, tuple(candidates[best].tolist()), float(values[best]))


def coupling_blocks(K: np.ndarray) -> list[list[int]] | None:
    """
    k_ij ≥ 0 ⇔ i, j 가 같은 블록 인 분할 {Y_k}

    그런 분할이 없으면 None.
    """
    K = np.asarray(K, dtype=float)
    n_blocks, labels = connected_components((K >= 0).astype(np.int8), directed=False)
    blocks = [sorted(np.flatnonzero(labels == b).tolist()) for b in range(n_blocks)]
    same = labels[:, None] == labels[None, :]
    if np.all((K >= 0) == same):
        return sorted(blocks)
    return None


def r_coefficients(K: np.ndarray, p: float) -> np.ndarray:
    """
    행 합이 모두 β 인 K 에 대해 a_i = β^{−1/(2p)}

    (a_i·Q) 는 (BS) 의 해가 됩니다: Σ_j k_ij a_j^{p+1} a_i^{p−1} = 1.
    """
    K = np.asarray(K, dtype=float)
    rows = K.sum(axis=1)
    beta = float(rows[0])
    if np.max(np.abs(rows - beta)) > ROW_SUM_TOLERANCE * max(1.0, abs(beta)):
        raise ParameterError(f"행 합이 같지 않습니다: {rows.tolist()}")
    if beta <= 0:
        raise ParameterError(f"행 합 β 는 양수여야 합니다: {beta}")
    a = np.full(K.shape[0], beta ** (-1 / (2 * p)))
    check = (K @ a ** (p + 1)) * a ** (p - 1)
    if not np.allclose(check, 1.0, rtol=1e-12, atol=0):
        raise ParameterError(f"계수가 속박 상태 조건을 만족하지 않습니다: {check.tolist()}")
    return a


# =============================================================================
# 라그랑주 승수와 (BS) 잔차
# =============================================================================

def multiplier_estimate(U: FieldVec, params: ModelParams, mass_floor: float | None = None) -> np.ndarray:
    """ω_i = (J_i − T_i)/M_i (질량이 mass_floor 이하인 성분은 NaN)"""
    r = report(U, params)
    if mass_floor is None:
        mass_floor = MULTIPLIER_MASS_FLOOR_RATIO * r.M
    M_i, T_i, J_i = (np.asarray(v) for v in (r.M_i, r.T_i, r.J_i))
    omega = np.full(U.M, np.nan)
    alive = M_i > mass_floor
    omega[alive] = (J_i[alive] - T_i[alive]) / M_i[alive]
    if not np.all(alive):
        logger.warning("질량이 0인 성분의 승수는 정의되지 않습니다: %s", np.flatnonzero(~alive).tolist())
    return omega


def bound_state_residual(
    U: FieldVec,
    params: ModelParams,
    omega: float | Sequence[float] = 1.0,
) -> np.ndarray:
    """성분별 ‖Δu_i − ω_i u_i + N_i(U)‖"""
    _check_compatible(U, params)
    grid = U.grid
    omega = np.nan_to_num(np.broadcast_to(np.asarray(omega, dtype=float), (U.M,)), nan=0.0)
    lap = ifft_field(-grid.k_squared * fft_field(U.data, grid), grid)
    residual = lap - omega.reshape(-1, *([1] * grid.dim)) * U.data + phase_rate(U.data, params) * U.data
    return np.sqrt(component_masses(residual, grid))

