"""
🌊 M-NLS 수치 실험 데모

이 스크립트는 결합 NLS 시스템의 기저 상태를 구하고, 범함수를 점검하고,
시간 전개와 궤도 거리를 계산하는 흐름을 보여줍니다.

사용 순서:
1. 모델 설정 (ModelParams, GridSpec)
2. 기저 상태 계산 (ground_state)
3. 범함수 점검 (report, gn_constant)
4. 시간 전개 (evolve) 와 궤도 거리 (orbital_distance)
5. 초임계 메커니즘 (weak_instability_demo)
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import numpy as np

# 경로 설정
sys.path.insert(0, str(Path(__file__).parent.parent))

from mnls_lab.diagnostics import orbital_distance, orbital_monitor
from mnls_lab.dynamics import StepperConfig, evolve
from mnls_lab.experiments import smooth_perturbation, weak_instability_demo
from mnls_lab.field_core import GridSpec, save_snapshot
from mnls_lab.functionals import ModelParams, gn_constant, report
from mnls_lab.groundstate import FlowConfig, ground_state


def demo_subcritical(output_dir: Path):
    """아임계 2성분 (K 전부 1, p = 1) 데모"""
    print("=" * 70)
    print("🌊 아임계 2성분 시스템: K = [[1, 1], [1, 1]], p = 1")
    print("=" * 70)

    # Step 1: 설정
    grid = GridSpec(dim=1, points=1024, box_length=40.0)
    params = ModelParams(p=1.0, coupling=np.ones((2, 2)))
    print(f"\n1️⃣ 설정: {grid.points} 점, L = {grid.box_length[0]}, 영역 = {params.regime.value}")

    # Step 2: 기저 상태
    print("\n2️⃣ 기저 상태 계산 중...")
    result = ground_state(params, FlowConfig(grid=grid))
    Q = result.profile
    print(f"   ✅ 반복 {result.iterations}회, 수렴 = {result.converged}")
    print(f"      - 성분 질량: {[round(m, 6) for m in result.report.M_i]}")
    print(f"      - (BS) 잔차: {np.max(result.bs_residual):.2e}")

    # Step 3: 범함수
    print("\n3️⃣ 범함수 점검:")
    r = report(Q, params)
    print(f"      - I − J = {r.I - r.J:.2e}")
    print(f"      - H     = {r.H:.2e}")
    print(f"      - S     = {r.S:.8f}")
    print(f"      - C_M   = {gn_constant(Q, params):.8f}")

    # Step 4: 섭동 후 전개
    print("\n4️⃣ 섭동 전개 (ε = 0.01, t ≤ 5)...")
    V0 = Q + smooth_perturbation(Q, seed=0) * 0.01
    trace = evolve(V0, params, StepperConfig(t_end=5.0, record_stride=100),
                   monitors={"orbital_distance": orbital_monitor(Q)})
    print(f"   ✅ 최종 시각 {trace.final_time:.3f}, 폭발 = {trace.blowup_detected}")
    print(f"      - sup d = {max(trace.orbital_distance):.4e}")
    print(f"      - 질량 표류 = {trace.mass_drift().max():.2e}")

    alignment = orbital_distance(trace.final_state, Q)
    print(f"      - 최종 정렬: y = {alignment.translation}, θ = {np.round(alignment.phases, 4).tolist()}")

    # Step 5: 저장
    print("\n5️⃣ 결과 저장 중...")
    output_dir.mkdir(parents=True, exist_ok=True)
    print(f"   ✅ 기저 상태: {save_snapshot(output_dir / 'ground_state.npz', Q)}")
    print(f"   ✅ 전개 기록: {trace.to_csv(output_dir / 'trace.csv')}")
    return result


def demo_supercritical():
    """초임계 스칼라 (p = 3, N = 1) 의 H < 0 근방"""
    print("\n" + "=" * 70)
    print("💥 초임계 메커니즘: p = 3, N = 1")
    print("=" * 70)

    params = ModelParams.scalar(3.0)
    rows = weak_instability_demo(params, FlowConfig(grid=GridSpec(points=1024, box_length=40.0)))
    for row in rows:
        print(f"   λ = {row['lambda']:.2f}: H = {row['H']:+.4e}, "
              f"S(W) − S(U) = {row['S_minus_SU']:+.4e}, λ* = {row['lambda_star']:.6f}, "
              f"부등식 = {row['inequality_holds']}")
    return rows


def main():
    logging.basicConfig(level=logging.INFO, format="%(asctime)s [%(levelname)s] %(message)s")
    output_dir = Path(__file__).parent / "results"
    demo_subcritical(output_dir)
    demo_supercritical()
    print(f"\n결과 저장 위치: {output_dir}")
    print("\n데모 완료!")


if __name__ == "__main__":
    main()
