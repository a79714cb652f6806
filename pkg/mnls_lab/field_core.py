"""
Field Core - 주기 상자 위의 벡터 필드 표현과 스펙트럼 미분

ℝ^N 을 한 변의 길이 L 인 주기 상자로 근사하고, M 개의 복소 성분을 가진
필드 U = (u_1, ..., u_M) 를 균일 격자 위에서 다룹니다.

주요 기능:
    - GridSpec: 격자 정의 (중심 좌표, 파수, 셀 부피)
    - ComponentField / FieldVec: 불변(immutable) 필드 컨테이너
    - laplacian, inner: 스펙트럼 라플라시안과 L² 내적 (사다리꼴 구적)
    - resample_scaled: λ^a · U(λx) 를 푸리에 보간으로 계산
    - shift, tail_mass, random_smooth_field, reference_soliton
    - save_snapshot / load_snapshot: 무손실 .npz 스냅샷

사용 예시:
    from mnls_lab.field_core import GridSpec, sample, laplacian, inner

    grid = GridSpec.cubic(dim=1, n=1024, L=40.0)
    Q = sample(grid, lambda x: np.sqrt(2) / np.cosh(x))
    print(inner(Q, Q).real)        # ≈ 4.0
    dQ = laplacian(Q)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import GridError, ResampleError, SampleError

logger = logging.getLogger(__name__)


# =============================================================================
# 상수 정의
# =============================================================================

DEFAULT_BOX_LENGTH = 40.0
DEFAULT_POINTS = 1024

# 경계 껍질 두께 (축 길이 대비 비율, 양쪽 각각)
TAIL_SHELL_FRACTION = 0.05
RESAMPLE_TAIL_TOLERANCE = 1e-6

# 보간 행렬을 한 번에 만들 최대 행 수 (메모리 제한)
_INTERP_CHUNK = 512


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


# =============================================================================
# 데이터 클래스
# =============================================================================

@dataclass(frozen=True)
class GridSpec:
    """
    주기 계산 상자

    Attributes:
        dim: 공간 차원 N (1, 2, 3)
        points: 축별 격자점 수 n (2의 거듭제곱)
        box_length: 축별 상자 길이 L
    """
    dim: int = 1
    points: tuple[int, ...] = (DEFAULT_POINTS,)
    box_length: tuple[float, ...] = (DEFAULT_BOX_LENGTH,)

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise GridError(f"지원하지 않는 차원입니다: {self.dim}")

        points = self.points
        if np.isscalar(points):
            points = (int(points),) * self.dim
        lengths = self.box_length
        if np.isscalar(lengths):
            lengths = (float(lengths),) * self.dim

        points = tuple(int(n) for n in points)
        lengths = tuple(float(L) for L in lengths)
        if len(points) != self.dim or len(lengths) != self.dim:
            raise GridError(f"축 개수가 차원과 다릅니다: points={points}, box_length={lengths}")
        for n in points:
            if not _is_power_of_two(n):
                raise GridError(f"격자점 수는 2의 거듭제곱이어야 합니다: {n}")
        for L in lengths:
            if not (np.isfinite(L) and L > 0):
                raise GridError(f"상자 길이는 양수여야 합니다: {L}")

        object.__setattr__(self, "points", points)
        object.__setattr__(self, "box_length", lengths)

    @classmethod
    def cubic(cls, dim: int = 1, n: int = DEFAULT_POINTS, L: float = DEFAULT_BOX_LENGTH) -> "GridSpec":
        return cls(dim=dim, points=(n,) * dim, box_length=(L,) * dim)

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        return cls(
            dim=int(data.get("dim", 1)),
            points=data.get("points", DEFAULT_POINTS),
            box_length=data.get("box_length", DEFAULT_BOX_LENGTH),
        )

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "points": list(self.points),
            "box_length": list(self.box_length),
        }

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.box_length, self.points))

    @property
    def cell_volume(self) -> float:
        """구적 가중치 h^N"""
        return float(np.prod(self.spacing))

    @property
    def axes(self) -> tuple[int, ...]:
        """(M, *shape) 배열에서 공간 축 인덱스"""
        return tuple(range(-self.dim, 0))

    def coords(self) -> list[np.ndarray]:
        """축별 중심 좌표 x ∈ [−L/2, L/2)"""
        return [-L / 2 + h * np.arange(n) for L, h, n in zip(self.box_length, self.spacing, self.points)]

    def wavenumbers(self) -> list[np.ndarray]:
        """축별 파수 2πk/L (FFT 순서)"""
        return [2 * np.pi * np.fft.fftfreq(n, d=h) for n, h in zip(self.points, self.spacing)]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.coords(), indexing="ij")

    @cached_property
    def k_squared(self) -> np.ndarray:
        """|k|² (FFT 순서, shape = grid.shape)"""
        kk = np.meshgrid(*self.wavenumbers(), indexing="ij")
        return sum(k ** 2 for k in kk)

    @cached_property
    def k_vectors(self) -> list[np.ndarray]:
        return np.meshgrid(*self.wavenumbers(), indexing="ij")

    @cached_property
    def radius_squared(self) -> np.ndarray:
        """|x|² (분산 가중치)"""
        return sum(x ** 2 for x in self.mesh())

    def shell_mask(self, fraction: float = TAIL_SHELL_FRACTION) -> np.ndarray:
        """경계 껍질 마스크: 어느 한 축이라도 |x_a| ≥ (1/2 − fraction)·L_a"""
        mask = np.zeros(self.shape, dtype=bool)
        for x, L in zip(self.mesh(), self.box_length):
            mask |= np.abs(x) >= (0.5 - fraction) * L
        return mask

    def high_k_mask(self, ratio: float = 2.0 / 3.0) -> np.ndarray:
        """|k_a| > ratio · k_nyquist 인 모드 마스크"""
        mask = np.zeros(self.shape, dtype=bool)
        for k, h in zip(self.k_vectors, self.spacing):
            mask |= np.abs(k) > ratio * np.pi / h
        return mask


@dataclass(frozen=True, eq=False)
class ComponentField:
    """단일 성분 u_i (격자점마다 복소수 값 하나)"""
    values: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != self.grid.shape:
            try:
                values = np.broadcast_to(values, self.grid.shape).copy()
            except ValueError:
                raise GridError(f"값 개수가 격자와 다릅니다: {values.shape} ≠ {self.grid.shape}") from None
        if not np.all(np.isfinite(values)):
            raise GridError("성분 값에 유한하지 않은 값이 있습니다")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __repr__(self) -> str:
        return f"ComponentField(grid={self.grid.points}, max|u|={np.max(np.abs(self.values)):.4g})"


@dataclass(frozen=True, eq=False)
class FieldVec:
    """
    M 성분 벡터 필드 (U, V, W, Q 를 모두 담는 컨테이너)

    Attributes:
        data: 복소 배열 (M, *grid.shape), 읽기 전용
        grid: 모든 성분이 공유하는 격자
    """
    data: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        if data.shape == self.grid.shape:
            data = data[np.newaxis]
        if data.ndim != self.grid.dim + 1 or data.shape[1:] != self.grid.shape or data.shape[0] < 1:
            raise GridError(f"필드 배열 모양이 격자와 맞지 않습니다: {data.shape}")
        if not np.all(np.isfinite(data)):
            raise GridError("필드에 유한하지 않은 값이 있습니다")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_components(cls, components: Sequence[ComponentField]) -> "FieldVec":
        if not components:
            raise GridError("성분이 하나 이상 필요합니다")
        grid = components[0].grid
        for c in components[1:]:
            if c.grid != grid:
                raise GridError("모든 성분은 같은 격자를 공유해야 합니다")
        return cls(np.stack([c.values for c in components]), grid)

    @classmethod
    def zeros(cls, grid: GridSpec, M: int = 1) -> "FieldVec":
        return cls(np.zeros((M, *grid.shape), dtype=complex), grid)

    @property
    def M(self) -> int:
        return self.data.shape[0]

    @property
    def components(self) -> list[ComponentField]:
        return [ComponentField(u, self.grid) for u in self.data]

    def component(self, i: int) -> ComponentField:
        return ComponentField(self.data[i], self.grid)

    def scaled(self, factors: float | Sequence[complex]) -> "FieldVec":
        """성분별 (또는 공통) 상수배"""
        f = np.asarray(factors, dtype=complex).reshape(-1, *([1] * self.grid.dim))
        return FieldVec(self.data * f, self.grid)

    def __add__(self, other: "FieldVec") -> "FieldVec":
        _check_same_grid(self.grid, other.grid)
        return FieldVec(self.data + other.data, self.grid)

    def __sub__(self, other: "FieldVec") -> "FieldVec":
        _check_same_grid(self.grid, other.grid)
        return FieldVec(self.data - other.data, self.grid)

    def __mul__(self, factor: complex) -> "FieldVec":
        return FieldVec(self.data * factor, self.grid)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"FieldVec(M={self.M}, grid={self.grid.points})"


def _check_same_grid(a: GridSpec, b: GridSpec) -> None:
    if a != b:
        raise GridError(f"격자가 다릅니다: {a.points}/{a.box_length} ≠ {b.points}/{b.box_length}")


# =============================================================================
# 스펙트럼 유틸리티
# =============================================================================

def fft_field(data: np.ndarray, grid: GridSpec) -> np.ndarray:
    return np.fft.fftn(data, axes=grid.axes)


def ifft_field(spec: np.ndarray, grid: GridSpec) -> np.ndarray:
    return np.fft.ifftn(spec, axes=grid.axes)


def spectral_weight(grid: GridSpec) -> float:
    """Parseval 가중치: Σ|u|²h^N = (h^N / n^N)·Σ|û|²"""
    return grid.cell_volume / grid.size


def component_masses(data: np.ndarray, grid: GridSpec) -> np.ndarray:
    """M_i = ‖u_i‖²"""
    axes = tuple(range(1, grid.dim + 1))
    return np.sum(np.abs(data) ** 2, axis=axes) * grid.cell_volume


def component_kinetics(data: np.ndarray, grid: GridSpec, spec: np.ndarray | None = None) -> np.ndarray:
    """T_i = ‖∇u_i‖² (스펙트럼 계산)"""
    if spec is None:
        spec = fft_field(data, grid)
    axes = tuple(range(1, grid.dim + 1))
    return np.sum(grid.k_squared * np.abs(spec) ** 2, axis=axes) * spectral_weight(grid)


# =============================================================================
# 기본 연산
# =============================================================================

def sample(grid: GridSpec, f: Callable[..., np.ndarray | complex]) -> ComponentField:
    """
    격자점에서 함수 값 샘플링

    Args:
        grid: 격자
        f: 좌표 배열을 받는 벡터화 함수 (1D: f(x), 2D: f(x, y), 3D: f(x, y, z))

    Returns:
        values[j] = f(x_j) 인 ComponentField
    """
    values = np.asarray(f(*grid.mesh()), dtype=complex)
    values = np.broadcast_to(values, grid.shape)
    bad = ~np.isfinite(values)
    if np.any(bad):
        index = tuple(int(i) for i in np.argwhere(bad)[0])
        raise SampleError(f"유한하지 않은 샘플 값이 있습니다: 격자점 {index}", index=index)
    return ComponentField(values, grid)


def laplacian(field: ComponentField | FieldVec) -> ComponentField | FieldVec:
    """스펙트럼 라플라시안: 각 푸리에 모드에 −|k|² 를 곱함"""
    grid = field.grid
    if isinstance(field, FieldVec):
        spec = fft_field(field.data, grid)
        return FieldVec(ifft_field(-grid.k_squared * spec, grid), grid)
    spec = np.fft.fftn(field.values)
    return ComponentField(np.fft.ifftn(-grid.k_squared * spec), grid)


def inner(a: ComponentField | FieldVec, b: ComponentField | FieldVec) -> complex:
    """L² 내적 Σ conj(a)·b·h^N (FieldVec 이면 성분 합)"""
    _check_same_grid(a.grid, b.grid)
    av = a.data if isinstance(a, FieldVec) else a.values
    bv = b.data if isinstance(b, FieldVec) else b.values
    if av.shape != bv.shape:
        raise GridError(f"성분 수가 다릅니다: {av.shape} ≠ {bv.shape}")
    return complex(np.vdot(av, bv) * a.grid.cell_volume)


def tail_mass(U: FieldVec, shell_fraction: float = TAIL_SHELL_FRACTION) -> float:
    """경계 껍질 안의 상대 질량"""
    density = np.sum(np.abs(U.data) ** 2, axis=0)
    total = float(np.sum(density))
    if total == 0.0:
        return 0.0
    return float(np.sum(density[U.grid.shell_mask(shell_fraction)]) / total)


def shift(U: FieldVec, y: Sequence[float] | float) -> FieldVec:
    """푸리에 평행이동: U(· + y)"""
    grid = U.grid
    y = np.broadcast_to(np.asarray(y, dtype=float), (grid.dim,))
    phase = np.exp(1j * sum(k * ya for k, ya in zip(grid.k_vectors, y)))
    return FieldVec(ifft_field(fft_field(U.data, grid) * phase, grid), grid)


def _interp_axis(spec: np.ndarray, grid: GridSpec, axis: int, lam: float) -> np.ndarray:
    """
    한 축에 대해 삼각 보간식을 점 λ·x_j 에서 평가 (스펙트럼 → 실공간)

    λ·x_j 가 상자 [-L/2, L/2) 밖이면 0 (주기 복사본을 끌어오지 않음).
    """
    x = grid.coords()[axis]
    k = grid.wavenumbers()[axis]
    x0 = -grid.box_length[axis] / 2
    n = grid.points[axis]
    data_axis = axis + 1
    pieces = []
    for start in range(0, n, _INTERP_CHUNK):
        y = lam * x[start:start + _INTERP_CHUNK]
        B = np.exp(1j * np.outer(y - x0, k)) / n
        B[(y < x0) | (y >= -x0)] = 0.0
        pieces.append(np.moveaxis(np.tensordot(B, spec, axes=([1], [data_axis])), 0, data_axis))
    return np.concatenate(pieces, axis=data_axis)


def resample_scaled(
    U: FieldVec,
    lam: float,
    exponent: float,
    tail_tolerance: float = RESAMPLE_TAIL_TOLERANCE,
) -> FieldVec:
    """
    λ^exponent · U(λx) 를 대역 제한(푸리에) 보간으로 계산

    exponent = N/2 이면 질량 보존 스케일링 P(U, λ), exponent = 1/p 이면 U_σ.

    Args:
        U: 입력 필드
        lam: 확대/축소 계수 λ > 0
        exponent: 진폭 지수
        tail_tolerance: 결과의 경계 껍질 상대 질량 허용치

    Raises:
        ResampleError: λ ≤ 0 이거나 결과가 상자 경계에서 무시할 수 없을 때
    """
    if not (np.isfinite(lam) and lam > 0):
        raise ResampleError(f"λ 는 양수여야 합니다: {lam}")
    grid = U.grid
    if lam == 1.0:
        return FieldVec(U.data.copy(), grid)

    values = fft_field(U.data, grid)
    for axis in range(grid.dim):
        values = _interp_axis(values, grid, axis, lam)
    out = FieldVec(values * lam ** exponent, grid)

    measured = tail_mass(out)
    if measured > tail_tolerance:
        raise ResampleError(
            f"스케일 후 경계 질량이 허용치를 넘습니다: λ={lam:.4g}, tail={measured:.3e}",
            tail_mass=measured,
        )
    return out


# =============================================================================
# 기준 필드 생성
# =============================================================================

def reference_soliton(grid: GridSpec, p: float, k: float = 1.0) -> ComponentField:
    """
    1차원 스칼라 기저 상태 (닫힌 형태)

    Δu − u + k|u|^{2p}u = 0 의 해 Q(x) = ((p+1)/k · sech²(px))^{1/(2p)}
    """
    if grid.dim != 1:
        raise GridError(f"닫힌 형태 솔리톤은 1차원에서만 정의됩니다: dim={grid.dim}")
    if k <= 0:
        raise GridError(f"스칼라 결합 상수는 양수여야 합니다: {k}")
    amplitude = ((p + 1) / k) ** (1 / (2 * p))
    return sample(grid, lambda x: amplitude / np.cosh(p * x) ** (1 / p))


def random_smooth_field(
    grid: GridSpec,
    M: int = 1,
    rng: np.random.Generator | int | None = None,
    n_bumps: int = 3,
    amplitude: float = 1.0,
    width: tuple[float, float] = (0.6, 2.0),
    spread: float | None = None,
) -> FieldVec:
    """
    무작위 매끄러운 필드 (변조된 가우시안 덩어리의 합)

    중심은 상자 중앙의 ±spread 안에 두어 경계에서 충분히 감쇠합니다.
    """
    rng = np.random.default_rng(rng)
    if spread is None:
        spread = min(grid.box_length) / 8
    mesh = grid.mesh()
    data = np.zeros((M, *grid.shape), dtype=complex)
    for i in range(M):
        for _ in range(n_bumps):
            a = amplitude * rng.uniform(0.3, 1.0)
            phi = rng.uniform(0, 2 * np.pi)
            w = rng.uniform(*width)
            center = rng.uniform(-spread, spread, size=grid.dim)
            kappa = rng.uniform(-1.0, 1.0, size=grid.dim)
            r2 = sum((x - c) ** 2 for x, c in zip(mesh, center))
            wave = sum(kk * x for kk, x in zip(kappa, mesh))
            data[i] += a * np.exp(1j * phi) * np.exp(-r2 / (2 * w ** 2)) * np.exp(1j * wave)
    return FieldVec(data, grid)


def gaussian_field(grid: GridSpec, amplitudes: Sequence[complex], width: float = 1.0) -> FieldVec:
    """공통 가우시안 윤곽에 성분별 진폭을 곱한 필드"""
    envelope = np.exp(-grid.radius_squared / (2 * width ** 2))
    a = np.asarray(amplitudes, dtype=complex).reshape(-1, *([1] * grid.dim))
    return FieldVec(a * envelope, grid)


# =============================================================================
# 스냅샷 입출력
# =============================================================================

def save_snapshot(path: str | Path, U: FieldVec) -> Path:
    """
    필드 스냅샷 저장 (.npz)

    저장 항목: dim, points, box_length (격자 기술자), M, data (M, *shape) 복소 배열
    """
    path = Path(path)
    if path.suffix != ".npz":
        path = path.with_suffix(".npz")
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(
        path,
        dim=np.int64(U.grid.dim),
        points=np.asarray(U.grid.points, dtype=np.int64),
        box_length=np.asarray(U.grid.box_length, dtype=float),
        M=np.int64(U.M),
        data=U.data,
    )
    return path


def load_snapshot(path: str | Path) -> FieldVec:
    """스냅샷 읽기 (저장한 값과 비트 단위로 동일)"""
    with np.load(Path(path)) as archive:
        grid = GridSpec(
            dim=int(archive["dim"]),
            points=tuple(int(n) for n in archive["points"]),
            box_length=tuple(float(L) for L in archive["box_length"]),
        )
        data = np.array(archive["data"])
        if data.shape[0] != int(archive["M"]):
            raise GridError(f"스냅샷 성분 수가 맞지 않습니다: {path}")
    return FieldVec(data, grid)
