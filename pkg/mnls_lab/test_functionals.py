"""
functionals 테스트

이 스크립트는 다음을 테스트합니다:
1. 닫힌 형태 솔리톤의 범함수 값 (M, T, J, E, H, S)
2. 영역 분류와 파라미터 검증
3. 게이지/평행이동 불변, 확대 스케일링 항등식 λ·dS/dλ = H, σ 스케일링, λ*(W)
4. GN 몫, 등호 재스케일, Weinstein 하한
5. (P1) 증거, 결합 블록, R 계수, 승수와 (BS) 잔차
"""

import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from mnls_lab._testing import TEST_GRID, run_module_tests, soliton
from mnls_lab.errors import ParameterError, RegimeError
from mnls_lab.field_core import FieldVec, GridSpec, random_smooth_field, shift
from mnls_lab.functionals import (
    ModelParams,
    Regime,
    WitnessKind,
    action_profile,
    action_slope,
    bound_state_residual,
    coupling_blocks,
    critical_identity_residual,
    dilation,
    gn_constant,
    gn_equality_rescale,
    gn_quotient,
    lambda_star,
    multiplier_estimate,
    p1_witness,
    r_coefficients,
    report,
    sigma_scaling,
    weinstein_bound,
)

CUBIC = ModelParams.scalar(1.0)


def test_soliton_functionals():
    r = report(soliton(), CUBIC)
    assert r.M == pytest.approx(4.0, abs=1e-9)
    assert r.T == pytest.approx(4.0 / 3.0, abs=1e-9)
    assert r.J == pytest.approx(16.0 / 3.0, abs=1e-9)
    assert r.E == pytest.approx(-2.0 / 3.0, abs=1e-9)
    assert r.S == pytest.approx(4.0 / 3.0, abs=1e-9)
    assert abs(r.H) < 1e-9
    assert abs(r.I - r.J) < 1e-9
    payload = json.loads(r.to_json())
    assert set(payload) >= {"M", "T", "J", "I", "E", "H", "S", "M_i"}
    assert dict(zip(r.CSV_HEADER, r.csv_row()))["S"] == r.S


def test_regime_classification():
    assert ModelParams.scalar(1.0).regime is Regime.SUBCRITICAL
    assert ModelParams.scalar(2.0).regime is Regime.CRITICAL
    assert ModelParams.scalar(3.0).regime is Regime.SUPERCRITICAL
    assert ModelParams.scalar(1.0, dim=2).regime is Regime.CRITICAL
    assert ModelParams.scalar(2.0 / 3.0, dim=3).regime is Regime.CRITICAL


def test_params_validation():
    with pytest.raises(ParameterError):
        ModelParams(p=1.0, coupling=[[1.0, 0.5], [0.4, 1.0]])
    with pytest.raises(ParameterError):
        ModelParams(p=4.0, coupling=[[1.0]], dim=3)
    with pytest.raises(ParameterError):
        ModelParams(p=0.0, coupling=[[1.0]])


def test_action_slope_identity():
    params = ModelParams(p=1.0, coupling=[[1.0, 0.3], [0.3, 0.8]])
    W = random_smooth_field(TEST_GRID, M=2, rng=5)
    for lam in (0.8, 1.0, 1.25):
        H = report(dilation(W, lam), params).H
        assert abs(lam * action_slope(W, params, lam) - H) < 1e-5 * (1 + abs(H))


def test_functionals_are_gauge_and_translation_invariant():
    params = ModelParams(p=1.0, coupling=[[1.0, 0.4], [0.4, 0.7]])
    W = random_smooth_field(TEST_GRID, M=2, rng=21)
    base = report(W, params)
    rotated = report(W.scaled(np.exp(1j * np.array([0.7, -2.1]))), params)
    moved = report(shift(W, 1.37), params)
    for other in (rotated, moved):
        for name in ("M", "T", "J", "E", "H", "S"):
            assert getattr(other, name) == pytest.approx(getattr(base, name), rel=1e-10), name


def test_action_profile_shape():
    lambdas = [0.8, 0.9, 1.0, 1.1, 1.25]
    rows = action_profile(soliton(), CUBIC, lambdas)
    assert [row[0] for row in rows] == lambdas
    actions = [row[1] for row in rows]
    assert int(np.argmin(actions)) == 2
    assert all(np.sign(row[2]) == np.sign(row[0] - 1) for row in rows if row[0] != 1.0)

    Q3 = soliton(3.0, grid=GridSpec(dim=1, points=1024, box_length=40.0))
    actions = [row[1] for row in action_profile(Q3, ModelParams.scalar(3.0), lambdas)]
    assert int(np.argmax(actions)) == 2


def test_sigma_scaling_law():
    params = ModelParams(p=1.0, coupling=[[1.0, 0.5], [0.5, 1.0]])
    W = random_smooth_field(TEST_GRID, M=2, rng=4, width=(0.6, 1.0), spread=2.5)
    r = report(W, params)
    for sigma in (0.5, 2.0):
        # H(U_σ) = σ^{2−N+2/p}·H(U), 여기서 지수 3
        H_sigma = report(sigma_scaling(W, sigma, params.p), params).H
        assert H_sigma == pytest.approx(sigma ** 3 * r.H, abs=1e-6 * sigma ** 3 * r.T)
    x = TEST_GRID.coords()[0]
    doubled = sigma_scaling(soliton(), 2.0, 1.0)
    assert np.max(np.abs(doubled.data[0] - 2 * np.sqrt(2) / np.cosh(2 * x))) < 1e-7


def test_lambda_star_of_dilated_soliton():
    params = ModelParams.scalar(3.0)
    W = dilation(soliton(3.0, grid=GridSpec(dim=1, points=1024, box_length=40.0)), 1.1)
    assert lambda_star(W, params) == pytest.approx(1 / 1.1, rel=1e-7)
    with pytest.raises(RegimeError):
        lambda_star(soliton(), CUBIC)


def test_gn_quotient_is_dilation_invariant():
    Q = soliton()
    C = gn_constant(Q, CUBIC)
    assert C == pytest.approx(1 / np.sqrt(3), rel=1e-9)
    for lam in (0.8, 1.3):
        assert gn_quotient(dilation(Q, lam), CUBIC) == pytest.approx(C, rel=1e-9)
    for seed in range(20):
        W = random_smooth_field(TEST_GRID, rng=seed)
        assert gn_quotient(W, CUBIC) <= C * (1 + 1e-9)


def test_gn_equality_rescale_recovers_mass_and_potential():
    Q = soliton()
    rescaled = gn_equality_rescale(dilation(Q, 1.2) * 2.0, CUBIC, Q)
    r, rQ = report(rescaled, CUBIC), report(Q, CUBIC)
    assert r.M == pytest.approx(rQ.M, rel=1e-8)
    assert r.J == pytest.approx(rQ.J, rel=1e-8)


def test_weinstein_bound():
    Q = soliton()
    lambda_g = report(Q, CUBIC).J
    assert weinstein_bound(Q, CUBIC, lambda_g) == pytest.approx(report(Q, CUBIC).I, rel=1e-9)
    for seed in range(20):
        W = random_smooth_field(TEST_GRID, rng=100 + seed)
        assert report(W, CUBIC).I >= weinstein_bound(W, CUBIC, lambda_g) * (1 - 1e-9)


def test_critical_identity():
    params = ModelParams.scalar(2.0)
    W = random_smooth_field(TEST_GRID, rng=7)
    r = report(W, params)
    assert critical_identity_residual(W, params) < 1e-12 * (1 + abs(r.E) + abs(r.H))
    with pytest.raises(RegimeError):
        critical_identity_residual(W, CUBIC)


def test_p1_witness_kinds():
    assert p1_witness(np.diag([0.5, 2.0])).kind is WitnessKind.DISJOINT_SUPPORT
    assert p1_witness(np.diag([0.5, 2.0])).index == 1
    shared = p1_witness(np.array([[-1.0, 2.0], [2.0, -1.0]]))
    assert shared.kind is WitnessKind.SHARED_PROFILE
    assert shared.value == pytest.approx(2.0)
    assert shared.coefficients == (1.0, 1.0)
    assert not p1_witness(-np.eye(2)).found


def test_coupling_blocks():
    K = np.array([[1.0, 1.0, -1.0], [1.0, 1.0, -1.0], [-1.0, -1.0, 0.5]])
    assert coupling_blocks(K) == [[0, 1], [2]]
    mixed = np.array([[1.0, -1.0, 1.0], [-1.0, 1.0, 1.0], [1.0, 1.0, 1.0]])
    assert coupling_blocks(mixed) is None


def test_r_coefficients():
    a = r_coefficients(np.ones((2, 2)), 1.0)
    assert np.allclose(a, 2 ** -0.5)
    with pytest.raises(ParameterError):
        r_coefficients(np.array([[1.0, 0.0], [0.0, 2.0]]), 1.0)


def test_multipliers_and_residual():
    Q = soliton(grid=GridSpec(dim=1, points=1024, box_length=60.0))
    assert multiplier_estimate(Q, CUBIC)[0] == pytest.approx(1.0, abs=1e-9)
    assert bound_state_residual(Q, CUBIC)[0] < 1e-9
    assert multiplier_estimate(Q * 2.0, CUBIC)[0] == pytest.approx(5.0, rel=1e-9)

    Q = soliton()
    params = ModelParams(p=1.0, coupling=np.eye(2))
    U = FieldVec(np.stack([Q.data[0], np.zeros(TEST_GRID.shape)]), TEST_GRID)
    omega = multiplier_estimate(U, params)
    assert omega[0] == pytest.approx(1.0, abs=1e-9)
    assert np.isnan(omega[1])


def main():
    return run_module_tests(globals(), "functionals 테스트")


if __name__ == "__main__":
    sys.exit(main())
