"""
field_core 테스트

이 스크립트는 다음을 테스트합니다:
1. 격자 검증과 좌표
2. 샘플링 오류 보고
3. 스펙트럼 라플라시안, 내적, 평행이동의 정확도 (1D, 2D)
4. 스케일 재표본화와 경계 질량 검사
5. 스냅샷 저장/읽기
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from mnls_lab._testing import TEST_GRID, run_module_tests, soliton
from mnls_lab.errors import GridError, ResampleError, SampleError
from mnls_lab.field_core import (
    ComponentField,
    FieldVec,
    GridSpec,
    component_masses,
    fft_field,
    gaussian_field,
    ifft_field,
    inner,
    laplacian,
    load_snapshot,
    random_smooth_field,
    resample_scaled,
    sample,
    save_snapshot,
    shift,
    spectral_weight,
    tail_mass,
)


def test_grid_rejects_non_power_of_two():
    with pytest.raises(GridError):
        GridSpec(dim=1, points=1000, box_length=40.0)


def test_grid_coordinates():
    grid = GridSpec(dim=1, points=8, box_length=8.0)
    assert grid.spacing == (1.0,)
    assert grid.shape == (8,)
    x = grid.coords()[0]
    assert x[0] == -4.0 and x[-1] == 3.0
    square = GridSpec.cubic(dim=2, n=16, L=10.0)
    assert square.shape == (16, 16)
    assert square.cell_volume == pytest.approx((10.0 / 16) ** 2)


def test_sample_reports_bad_index():
    grid = GridSpec(dim=1, points=16, box_length=16.0)
    with pytest.raises(SampleError) as info:
        sample(grid, lambda x: np.where(np.isclose(x, x[5]), np.nan, 1.0))
    assert info.value.index == (5,)


def test_laplacian_of_gaussian():
    u = sample(TEST_GRID, lambda x: np.exp(-x ** 2))
    x = TEST_GRID.coords()[0]
    expected = (4 * x ** 2 - 2) * np.exp(-x ** 2)
    assert np.max(np.abs(laplacian(u).values - expected)) < 1e-10


def test_laplacian_two_dimensional():
    grid = GridSpec.cubic(dim=2, n=128, L=20.0)
    u = sample(grid, lambda x, y: np.exp(-(x ** 2 + y ** 2)))
    r2 = grid.radius_squared
    expected = (4 * r2 - 4) * np.exp(-r2)
    assert np.max(np.abs(laplacian(u).values - expected)) < 1e-9


def test_inner_gives_soliton_mass():
    Q = soliton()
    assert inner(Q, Q).real == pytest.approx(4.0, abs=1e-10)
    assert abs(inner(Q, Q).imag) < 1e-14


def test_laplacian_is_self_adjoint():
    u = random_smooth_field(TEST_GRID, M=2, rng=5)
    v = random_smooth_field(TEST_GRID, M=2, rng=6)
    left = inner(laplacian(u), v)
    right = inner(u, laplacian(v))
    assert abs(left - right) < 1e-10 * max(1.0, abs(left))


def test_parseval_and_spectral_round_trip():
    u = random_smooth_field(TEST_GRID, M=3, rng=8)
    spec = fft_field(u.data, TEST_GRID)
    physical = component_masses(u.data, TEST_GRID)
    spectral = np.sum(np.abs(spec) ** 2, axis=1) * spectral_weight(TEST_GRID)
    assert np.allclose(physical, spectral, rtol=1e-12)
    assert np.max(np.abs(ifft_field(spec, TEST_GRID) - u.data)) < 1e-13


def test_tail_mass_detects_edge_content():
    assert tail_mass(soliton()) < 1e-12
    edge = FieldVec.from_components([sample(TEST_GRID, lambda x: np.exp(-(x - 19.0) ** 2))])
    assert tail_mass(edge) > 0.4


def test_shift_matches_translated_gaussian():
    u = FieldVec.from_components([sample(TEST_GRID, lambda x: np.exp(-x ** 2))])
    moved = shift(u, 0.37)
    x = TEST_GRID.coords()[0]
    assert np.max(np.abs(moved.data[0] - np.exp(-(x + 0.37) ** 2))) < 1e-10


def test_resample_matches_scaled_gaussian():
    u = FieldVec.from_components([sample(TEST_GRID, lambda x: np.exp(-x ** 2 / 2))])
    scaled = resample_scaled(u, 1.5, 0.5)
    x = TEST_GRID.coords()[0]
    expected = np.sqrt(1.5) * np.exp(-(1.5 * x) ** 2 / 2)
    assert np.max(np.abs(scaled.data[0] - expected)) < 1e-9


def test_resample_compression_drops_periodic_images():
    scaled = resample_scaled(soliton(), 2.0, 0.5)
    x = TEST_GRID.coords()[0]
    expected = 2.0 / np.cosh(2 * x)
    assert np.max(np.abs(scaled.data[0] - expected)) < 1e-7
    assert np.all(scaled.data[0][np.abs(x) > 10.0] == 0)


def test_mass_preserving_scaling_over_lambda_range():
    grid = GridSpec(dim=1, points=1024, box_length=60.0)
    Q = soliton(grid=grid)
    for lam in np.linspace(0.5, 2.0, 7):
        scaled = resample_scaled(Q, float(lam), 0.5)
        assert component_masses(scaled.data, grid)[0] == pytest.approx(4.0, rel=1e-8), lam


def test_resample_identity_returns_copy():
    u = random_smooth_field(TEST_GRID, M=2, rng=3)
    same = resample_scaled(u, 1.0, 0.5)
    assert np.array_equal(same.data, u.data)
    assert same.data is not u.data


def test_resample_rejects_wide_result():
    with pytest.raises(ResampleError) as info:
        resample_scaled(soliton(), 0.1, 0.5)
    assert info.value.tail_mass > 1e-6
    with pytest.raises(ResampleError):
        resample_scaled(soliton(), -1.0, 0.5)


def test_fields_are_read_only():
    u = gaussian_field(TEST_GRID, [1.0, 0.5j])
    assert u.M == 2
    with pytest.raises(ValueError):
        u.data[0, 0] = 1.0
    with pytest.raises(GridError):
        ComponentField(np.ones(7), TEST_GRID)


def test_snapshot_is_bit_identical(tmp_path):
    u = random_smooth_field(TEST_GRID, M=3, rng=11)
    path = save_snapshot(tmp_path / "field.npz", u)
    restored = load_snapshot(path)
    assert restored.grid == u.grid
    assert np.array_equal(restored.data, u.data)


def main():
    return run_module_tests(globals(), "field_core 테스트")


if __name__ == "__main__":
    sys.exit(main())
