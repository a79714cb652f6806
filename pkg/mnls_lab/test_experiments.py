"""
experiments 테스트

이 스크립트는 다음을 테스트합니다:
1. 실험 정의 검증 (영역, 판정 기준 이름, ε)
2. 섭동 η 의 정규화와 종료 코드
3. 항등식/GN 점검 (작은 무작위 표본)
4. 짧은 안정성 실험 (단일 기저 상태, B^c, 부분계 X)
5. 약한 불안정성 메커니즘 기록, 결과 저장, 스윕
6. 폭발 실험: 촘촘한 기록, 기록 부족 시 판정 불가, 전체 실행 (느림)
"""

import csv
import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from mnls_lab import experiments
from mnls_lab._testing import TEST_GRID, run_module_tests, soliton
from mnls_lab.diagnostics import h1_norm
from mnls_lab.dynamics import EvolutionTrace
from mnls_lab.errors import ParameterError, RegimeError
from mnls_lab.experiments import (
    BLOWUP_RECORD_STRIDE,
    ExperimentKind,
    ExperimentSpec,
    Status,
    run_experiment,
    run_sweep,
    smooth_perturbation,
    weak_instability_demo,
)
from mnls_lab.field_core import GridSpec
from mnls_lab.functionals import ModelParams, report
from mnls_lab.groundstate import FlowConfig

CUBIC = ModelParams.scalar(1.0)
WIDE_GRID = GridSpec(dim=1, points=1024, box_length=40.0)


def test_spec_validation():
    with pytest.raises(RegimeError):
        ExperimentSpec(kind=ExperimentKind.STABILITY, params=ModelParams.scalar(3.0), grid=TEST_GRID)
    with pytest.raises(RegimeError):
        ExperimentSpec(kind="critical_blowup", params=CUBIC, grid=TEST_GRID)
    with pytest.raises(ParameterError):
        ExperimentSpec(kind="gn_suite", params=CUBIC, grid=TEST_GRID, thresholds={"unknown": 1.0})
    with pytest.raises(ParameterError):
        ExperimentSpec(kind="stability", params=CUBIC, grid=TEST_GRID, epsilon=-0.1)
    with pytest.raises(ParameterError):
        ExperimentSpec(kind="gn_suite", params=CUBIC, grid=GridSpec.cubic(dim=2, n=32, L=20.0))


def test_spec_defaults_follow_t_end():
    spec = ExperimentSpec(kind="stability", params=CUBIC, grid=TEST_GRID, t_end=3.0, seed=7)
    assert spec.kind is ExperimentKind.STABILITY
    assert spec.stepper.t_end == 3.0
    assert spec.flow.grid == TEST_GRID and spec.flow.seed == 7
    assert spec.threshold("distance_factor") == 5.0
    assert spec.to_dict()["thresholds"]["zero_floor"] == 1e-5


def test_blowup_defaults_record_densely():
    spec = ExperimentSpec(kind="supercritical_blowup", params=ModelParams.scalar(3.0), grid=WIDE_GRID, t_end=1.0)
    assert spec.stepper.record_stride == BLOWUP_RECORD_STRIDE
    stability = ExperimentSpec(kind="stability", params=CUBIC, grid=TEST_GRID, t_end=1.0)
    assert stability.stepper.record_stride > spec.stepper.record_stride


def test_short_blowup_window_is_inconclusive(monkeypatch):
    strides = []

    def early_blowup(V0, params, cfg, monitors=None):
        strides.append(cfg.record_stride)
        r = report(V0, params)
        return EvolutionTrace(
            times=[0.0, cfg.record_interval], masses=[[r.M]] * 2, kinetics=[[r.T]] * 2,
            energy=[r.E] * 2, pohozaev=[r.H] * 2, action=[r.S] * 2, potential=[r.J] * 2,
            variance=[1.0, 0.9], gradient_norm=[1.0, 1e3], tail_mass=[0.0, 0.0],
            blowup_detected=True, blowup_reason="gradient", final_time=cfg.record_interval,
        )

    monkeypatch.setattr(experiments, "evolve", early_blowup)
    monkeypatch.setattr(experiments, "_ground_state_profile", lambda spec: soliton(3.0, grid=WIDE_GRID))
    spec = ExperimentSpec(kind="supercritical_blowup", params=ModelParams.scalar(3.0), grid=WIDE_GRID,
                          dilation=1.3, t_end=1.0)
    outcome = run_experiment(spec)
    assert strides == [BLOWUP_RECORD_STRIDE, 1]
    assert outcome.status is Status.INCONCLUSIVE
    assert "variance_concave" not in outcome.checks
    assert outcome.measured["variance_records"] == 2


def test_smooth_perturbation_is_normalised():
    Q = soliton()
    eta = smooth_perturbation(Q, seed=3)
    assert h1_norm(eta) == pytest.approx(1.0, rel=1e-12)
    overlap = np.real(np.vdot(Q.data[0], eta.data[0])) * TEST_GRID.cell_volume
    assert abs(overlap) < 1e-12
    assert np.array_equal(eta.data, smooth_perturbation(Q, seed=3).data)


def test_status_exit_codes():
    assert Status.PASS.exit_code == 0
    assert Status.FAIL.exit_code == 1
    assert Status.INCONCLUSIVE.exit_code == 2


def test_gn_suite_passes_for_cubic():
    spec = ExperimentSpec(kind="gn_suite", params=CUBIC, grid=TEST_GRID, n_random=20)
    outcome = run_experiment(spec)
    assert outcome.passed, outcome.checks
    assert outcome.measured["violations"] == 0
    assert outcome.measured["C_M"] == pytest.approx(outcome.measured["C_M_closed_form"], rel=1e-5)
    assert "elapsed_sec" in outcome.measured


def test_identity_suite_passes_for_critical():
    spec = ExperimentSpec(kind="identity_suite", params=ModelParams.scalar(2.0), grid=TEST_GRID, n_random=20)
    outcome = run_experiment(spec)
    assert outcome.passed, outcome.checks
    assert "critical_identity" in outcome.checks
    assert outcome.checks["sigma_scaling"]


def test_stability_short_run():
    spec = ExperimentSpec(kind="stability", params=CUBIC, grid=TEST_GRID, epsilon=0.01, t_end=2.0)
    outcome = run_experiment(spec)
    assert outcome.status is Status.PASS, outcome.checks
    assert outcome.measured["sup_distance"] <= 5 * 0.01
    assert outcome.measured["initial_distance"] <= 0.01 * (1 + 1e-6)


def test_stability_without_perturbation_uses_floor():
    spec = ExperimentSpec(kind="stability", params=CUBIC, grid=TEST_GRID, epsilon=0.0, t_end=1.0)
    outcome = run_experiment(spec)
    assert outcome.measured["distance_limit"] == 1e-5
    assert outcome.measured["ratio"] is None
    assert outcome.passed, outcome.checks


def test_per_component_level_state_is_stable():
    params = ModelParams(p=1.0, coupling=np.ones((2, 2)))
    spec = ExperimentSpec(kind="per_component_stability", params=params, grid=TEST_GRID,
                          epsilon=0.01, t_end=1.0, variant="bc")
    outcome = run_experiment(spec)
    assert outcome.passed, outcome.checks
    assert np.allclose(outcome.measured["coefficients"], 2 ** -0.5)
    assert "bc_state" in outcome.snapshots


def test_subsystem_stability_keeps_outside_mass():
    params = ModelParams(p=1.0, coupling=[[1.0, 0.5, 0.2], [0.5, 1.0, 0.2], [0.2, 0.2, 1.0]])
    spec = ExperimentSpec(kind="per_component_stability", params=params, grid=TEST_GRID,
                          epsilon=0.01, t_end=1.0, subset=[0, 1])
    outcome = run_experiment(spec)
    assert outcome.checks["outside_mass_bounded"]
    assert outcome.measured["outside_components"] == [2]
    assert outcome.passed, outcome.checks
    with pytest.raises(ParameterError):
        run_experiment(ExperimentSpec(kind="per_component_stability", params=params, grid=TEST_GRID,
                                      t_end=1.0, subset=[0, 1, 2]))


def test_weak_instability_rows():
    rows = weak_instability_demo(ModelParams.scalar(3.0), FlowConfig(grid=WIDE_GRID), lambdas=(1.05, 1.1))
    assert [row["lambda"] for row in rows] == [1.05, 1.1]
    for row in rows:
        assert row["H"] < 0
        assert row["lambda_star"] == pytest.approx(1 / row["lambda"], rel=1e-6)
        assert row["inequality_applies"] and row["inequality_holds"]
    with pytest.raises(RegimeError):
        weak_instability_demo(CUBIC, FlowConfig(grid=TEST_GRID))


def test_outcome_save(tmp_path):
    spec = ExperimentSpec(kind="stability", params=CUBIC, grid=TEST_GRID, epsilon=0.01, t_end=0.5)
    outcome = run_experiment(spec)
    artifacts = outcome.save(tmp_path)
    assert set(artifacts) >= {"summary", "trace", "initial", "final", "ground_state"}
    summary = json.loads((tmp_path / "summary.json").read_text(encoding="utf-8"))
    assert summary["kind"] == "stability"
    assert summary["status"] == outcome.status.value
    assert summary["spec"]["thresholds"]["distance_factor"] == 5.0
    assert (tmp_path / "trace.csv").exists()


def test_sweep_runs_jobs_and_records_errors(tmp_path):
    params = ModelParams(p=1.0, coupling=np.ones((2, 2)))
    specs = [
        ExperimentSpec(kind="gn_suite", params=CUBIC, grid=TEST_GRID, n_random=5),
        ExperimentSpec(kind="per_component_stability", params=params, grid=TEST_GRID,
                       t_end=0.1, variant="unknown"),
    ]
    results = run_sweep(specs, tmp_path, max_concurrent=2)
    assert [r.index for r in results] == [0, 1]
    assert results[0].status == "pass" and results[0].exit_code == 0
    assert results[1].status == "error" and "ParameterError" in results[1].error
    assert results[1].exit_code == Status.INCONCLUSIVE.exit_code
    assert (Path(results[0].output_dir) / "summary.json").exists()
    with (tmp_path / "sweep.csv").open(encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert [row["status"] for row in rows] == ["pass", "error"]


@pytest.mark.slow
def test_uniform_coupling_has_continuum_of_ground_states():
    params = ModelParams(p=1.0, coupling=np.ones((2, 2)))
    spec = ExperimentSpec(kind="identity_suite", params=params, grid=TEST_GRID, n_random=20, n_seeds=10)
    outcome = run_experiment(spec)
    assert outcome.checks["continuum_action"]
    assert outcome.checks["continuum_ratios_vary"]
    assert outcome.measured["continuum_spread"] < 1e-5


@pytest.mark.slow
def test_stability_long_run():
    spec = ExperimentSpec(kind="stability", params=CUBIC, grid=TEST_GRID, epsilon=0.01, t_end=50.0)
    outcome = run_experiment(spec)
    assert outcome.status is Status.PASS, outcome.checks
    assert outcome.measured["sup_distance"] <= 5 * 0.01


@pytest.mark.slow
def test_supercritical_blowup_experiment():
    spec = ExperimentSpec(kind="supercritical_blowup", params=ModelParams.scalar(3.0), grid=WIDE_GRID,
                          dilation=1.3, t_end=10.0)
    outcome = run_experiment(spec)
    assert outcome.checks["H0_negative"]
    assert outcome.checks["blowup_detected"]
    assert outcome.checks["H_below_action_gap"]
    assert outcome.status is Status.PASS, outcome.checks


@pytest.mark.slow
def test_supercritical_r_variant_blows_up_together():
    params = ModelParams(p=3.0, coupling=np.ones((2, 2)))
    spec = ExperimentSpec(kind="supercritical_blowup", params=params, grid=WIDE_GRID,
                          dilation=1.3, t_end=10.0, variant="r", seed=2)
    outcome = run_experiment(spec)
    assert outcome.checks["simultaneous"]
    assert outcome.checks["blowup_detected"]


@pytest.mark.slow
def test_critical_blowup_experiment():
    spec = ExperimentSpec(kind="critical_blowup", params=ModelParams.scalar(2.0), grid=WIDE_GRID,
                          amplitude=1.05, t_end=20.0)
    outcome = run_experiment(spec)
    assert outcome.checks["H0_negative"]
    assert outcome.checks["identity"]
    assert outcome.checks["blowup_detected"]


def main():
    return run_module_tests(globals(), "experiments 테스트")


if __name__ == "__main__":
    sys.exit(main())
