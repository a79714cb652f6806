"""
dynamics 테스트

이 스크립트는 다음을 테스트합니다:
1. 부분 단계의 질량 보존과 Strang 단계의 시간 가역성
2. 솔리톤의 정지성, 질량/에너지 보존 (10⁴ 단계 포함), K = 0 자유 전개
3. 분산의 2계 차분과 8H 비교 (Virial)
4. 경계 질량 초과 플래그와 초임계 폭발 플래그
5. 설정 검증과 CSV 기록
"""

import csv
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from mnls_lab._testing import TEST_GRID, run_module_tests, soliton
from mnls_lab.diagnostics import orbital_monitor, virial_residual
from mnls_lab.dynamics import (
    BlowupReason,
    StepperConfig,
    evolve,
    kinetic_step,
    nonlinear_phase_step,
    strang_step,
)
from mnls_lab.errors import ParameterError
from mnls_lab.field_core import FieldVec, GridSpec, component_masses, random_smooth_field, sample
from mnls_lab.functionals import ModelParams, dilation

CUBIC = ModelParams.scalar(1.0)


def test_substeps_conserve_mass():
    V = random_smooth_field(TEST_GRID, M=2, rng=4)
    params = ModelParams(p=1.0, coupling=[[1.0, 0.4], [0.4, -0.5]])
    masses = component_masses(V.data, TEST_GRID)
    for W in (kinetic_step(V, 0.01), nonlinear_phase_step(V, params, 0.01)):
        assert np.allclose(component_masses(W.data, TEST_GRID), masses, rtol=1e-13)


def test_strang_step_is_reversible():
    V = random_smooth_field(TEST_GRID, M=2, rng=9)
    params = ModelParams(p=1.5, coupling=[[1.0, 0.2], [0.2, 1.0]])
    back = strang_step(strang_step(V, params, 0.01), params, -0.01)
    assert np.max(np.abs(back.data - V.data)) < 1e-12


def test_soliton_is_stationary():
    Q = soliton()
    trace = evolve(Q, CUBIC, StepperConfig(dt=1e-3, t_end=1.0, record_stride=100),
                   monitors={"orbital_distance": orbital_monitor(Q)})
    assert trace.final_time == pytest.approx(1.0)
    assert not trace.blowup_detected and not trace.tail_violation
    assert max(trace.orbital_distance) < 1e-5


def test_mass_and_energy_conservation():
    V0 = soliton() + random_smooth_field(TEST_GRID, rng=2) * 0.05
    trace = evolve(V0, CUBIC, StepperConfig(dt=5e-4, t_end=1.0, record_stride=100))
    assert np.max(trace.mass_drift()) < 1e-11
    assert trace.energy_drift() < 1e-4
    assert len(trace.times) == 21


def test_long_run_conservation():
    trace = evolve(soliton(), CUBIC, StepperConfig(dt=1e-3, t_end=10.0, record_stride=100))
    assert trace.final_time == pytest.approx(10.0)
    assert not trace.blowup_detected and not trace.tail_violation
    assert np.max(trace.mass_drift()) < 1e-10
    assert trace.energy_drift() < 1e-6


def test_free_evolution_is_exact():
    free = ModelParams(p=1.0, coupling=[[0.0]])
    V0 = FieldVec.from_components([sample(TEST_GRID, lambda x: np.exp(-x ** 2 / 2))])
    trace = evolve(V0, free, StepperConfig(dt=1e-3, t_end=1.0, record_stride=10))
    x = TEST_GRID.coords()[0]
    exact = np.exp(-x ** 2 / (2 * (1 + 2j))) / np.sqrt(1 + 2j)
    assert np.max(np.abs(trace.final_state.data[0] - exact)) < 1e-10
    assert virial_residual(trace) < 1e-4


def test_variance_follows_virial_identity():
    V0 = FieldVec.from_components([sample(TEST_GRID, lambda x: 2 * np.exp(-x ** 2))])
    cfg = StepperConfig(dt=2.5e-4, t_end=1.0, record_stride=40, adaptive=False)
    assert virial_residual(evolve(V0, CUBIC, cfg)) < 5e-3

    perturbed = soliton() + random_smooth_field(TEST_GRID, rng=12) * 0.05
    trace = evolve(perturbed, CUBIC, StepperConfig(dt=1e-3, t_end=1.0, record_stride=10))
    assert virial_residual(trace) < 1e-3


def test_tail_violation_stops_run():
    V0 = FieldVec.from_components([sample(TEST_GRID, lambda x: 0.5 * np.exp(-x ** 2) * np.exp(5j * x))])
    trace = evolve(V0, CUBIC, StepperConfig(dt=1e-3, t_end=3.0, record_stride=50))
    assert trace.tail_violation
    assert not trace.blowup_detected
    assert trace.final_time < 3.0


@pytest.mark.slow
def test_supercritical_dilation_blows_up():
    grid = GridSpec(dim=1, points=1024, box_length=40.0)
    params = ModelParams.scalar(3.0)
    V0 = dilation(soliton(3.0, grid=grid), 1.3)
    trace = evolve(V0, params, StepperConfig(dt=1e-3, t_end=10.0, record_stride=20))
    assert trace.blowup_detected
    assert trace.blowup_reason in {reason.value for reason in BlowupReason}
    assert trace.final_time < 10.0


def test_stepper_validation():
    with pytest.raises(ParameterError):
        StepperConfig(dt=1e-8, dt_min=1e-7)
    with pytest.raises(ParameterError):
        StepperConfig(record_stride=0)
    with pytest.raises(ParameterError):
        StepperConfig(t_end=0.0)


def test_trace_csv(tmp_path):
    Q = soliton()
    trace = evolve(Q, CUBIC, StepperConfig(dt=1e-3, t_end=0.1, record_stride=10),
                   monitors={"orbital_distance": orbital_monitor(Q)})
    path = trace.to_csv(tmp_path / "trace.csv")
    with path.open(encoding="utf-8") as f:
        rows = list(csv.reader(f))
    assert rows[0][:3] == ["t", "E", "H"]
    assert "orbital_distance" in rows[0]
    assert len(rows) == len(trace.times) + 1
    assert trace.summary_dict()["records"] == len(trace.times)


def main():
    return run_module_tests(globals(), "dynamics 테스트")


if __name__ == "__main__":
    sys.exit(main())
