"""
diagnostics 테스트

이 스크립트는 다음을 테스트합니다:
1. H¹ 노름과 분산의 닫힌 형태 값
2. 분산 2계 차분 / Virial 잔차 (합성 기록, 오류 경로)
3. 궤도 거리: 격자 밖 평행이동과 성분별 위상 복원
4. 회전족 거리
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from mnls_lab._testing import TEST_GRID, run_module_tests, soliton
from mnls_lab.diagnostics import (
    family_distance,
    h1_norm,
    orbital_distance,
    rotation_family,
    variance,
    variance_second_difference,
    virial_residual,
)
from mnls_lab.dynamics import EvolutionTrace
from mnls_lab.errors import GridError, OrbitalError, VirialError
from mnls_lab.field_core import FieldVec, GridSpec, random_smooth_field, sample, shift


def test_h1_norm_of_soliton():
    assert h1_norm(soliton()) == pytest.approx(np.sqrt(4.0 + 4.0 / 3.0), rel=1e-10)


def test_variance_of_gaussian():
    u = FieldVec.from_components([sample(TEST_GRID, lambda x: np.exp(-x ** 2 / 2))])
    assert variance(u) == pytest.approx(np.sqrt(np.pi) / 2, rel=1e-10)


def test_virial_residual_on_exact_record():
    times = [0.1 * j for j in range(8)]
    trace = EvolutionTrace(
        times=times,
        variance=[1.0 + 4.0 * t ** 2 for t in times],
        pohozaev=[1.0] * len(times),
    )
    t_mid, d2 = variance_second_difference(trace)
    assert len(t_mid) == len(times) - 2
    assert np.allclose(d2, 8.0)
    assert virial_residual(trace) < 1e-10


def test_virial_rejects_bad_records():
    with pytest.raises(VirialError):
        variance_second_difference(EvolutionTrace(times=[0.0, 0.1], variance=[1.0, 1.0]))
    uneven = EvolutionTrace(times=[0.0, 0.1, 0.3], variance=[1.0, 1.0, 1.0], pohozaev=[0.0] * 3)
    with pytest.raises(VirialError):
        virial_residual(uneven)


def test_orbital_distance_recovers_translation_and_phases():
    q = soliton().data[0]
    Q = FieldVec(np.stack([q, 0.5 * q]), TEST_GRID)
    V = shift(Q, 0.3).scaled(np.exp(1j * np.array([0.5, -1.2])))
    alignment = orbital_distance(V, Q)
    assert alignment.translation[0] == pytest.approx(0.3, abs=1e-8)
    assert alignment.phases[0] == pytest.approx(0.5, abs=1e-8)
    assert alignment.phases[1] == pytest.approx(-1.2, abs=1e-8)
    assert alignment.distance < 1e-8


def test_orbital_distance_is_h1_size_of_perturbation():
    Q = soliton()
    eta = random_smooth_field(TEST_GRID, rng=1) * 1e-3
    d = orbital_distance(Q + eta, Q).distance
    assert d <= h1_norm(eta) * (1 + 1e-6)
    assert d > 0.1 * h1_norm(eta)


def test_orbital_distance_errors():
    Q = soliton()
    with pytest.raises(OrbitalError):
        orbital_distance(Q, FieldVec.zeros(TEST_GRID))
    with pytest.raises(OrbitalError):
        orbital_distance(FieldVec.zeros(TEST_GRID, M=2), Q)
    other = GridSpec(dim=1, points=256, box_length=40.0)
    with pytest.raises(GridError):
        orbital_distance(FieldVec.zeros(other), Q)


def test_rotation_family_distance():
    q = soliton()
    family = rotation_family(q)
    V = shift(family(0.3), -0.2).scaled(np.exp(1j * np.array([0.7, 0.1])))
    alpha, alignment = family_distance(V, family, samples=16)
    assert alpha == pytest.approx(0.3, abs=1e-5)
    assert alignment.distance < 1e-5
    with pytest.raises(OrbitalError):
        rotation_family(FieldVec.zeros(TEST_GRID, M=2))


def main():
    return run_module_tests(globals(), "diagnostics 테스트")


if __name__ == "__main__":
    sys.exit(main())
