"""
CLI - mnls-lab 명령행 진입점

주요 기능:
    - groundstate: 기저 상태 계산 후 프로파일/보고서/수렴 기록 저장
    - evolve: 스냅샷(또는 기저 상태)을 시간 전개하고 기록 저장
    - stability / blowup / identities / gn-check: 실험 실행 후 판정
    - sweep: 설정의 작업 목록을 동시에 실행

종료 코드: 0 통과, 1 실패, 2 판정 불가, 3 설정/사용 오류

사용 예시:
    mnls-lab stability --config runs/stability.yaml --seed 3 --output runs/out
    python -m mnls_lab.cli blowup --config runs/supercritical.yaml --verbose
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import CONFIG_USED_NAME, LabConfig, config_from_dict, load_config
from .dynamics import evolve
from .errors import ConfigError, ConvergenceError, LabError
from .experiments import (
    ExperimentKind,
    ExperimentOutcome,
    Status,
    run_experiment,
    run_sweep,
)
from .field_core import load_snapshot, save_snapshot
from .functionals import Regime, dilation
from .groundstate import ground_state, minimize

logger = logging.getLogger(__name__)

EXIT_USAGE = 3
DEFAULT_OUTPUT_ROOT = Path("runs")


# =============================================================================
# 출력 도우미
# =============================================================================

def print_section(title: str) -> None:
    print("=" * 70)
    print(title)
    print("=" * 70)


def print_outcome(outcome: ExperimentOutcome) -> None:
    icon = {Status.PASS: "✅", Status.FAIL: "❌", Status.INCONCLUSIVE: "⚠️"}[outcome.status]
    print_section(f"{icon} {outcome.kind.value}: {outcome.status.value.upper()}")
    for name, ok in outcome.checks.items():
        print(f"   {'✅' if ok else '❌'} {name}")
    for key, value in outcome.measured.items():
        if isinstance(value, float):
            print(f"   - {key}: {value:.6g}")
        elif not isinstance(value, (list, dict)):
            print(f"   - {key}: {value}")
    for name, path in outcome.artifacts.items():
        print(f"   📁 {name}: {path}")


# =============================================================================
# 하위 명령
# =============================================================================

def cmd_groundstate(cfg: LabConfig, args: argparse.Namespace, output: Path) -> int:
    params = cfg.model_params()
    flow = cfg.flow_config(seed=args.seed)
    try:
        if cfg.constraint:
            result = minimize(cfg.constraint_spec(), params, flow)
        else:
            result = ground_state(params, flow)
    except ConvergenceError as e:
        logger.error("%s", e)
        result = e.result
        if result is None:
            return Status.FAIL.exit_code

    output.mkdir(parents=True, exist_ok=True)
    (output / "summary.json").write_text(result.to_json(), encoding="utf-8")
    save_snapshot(output / "profile.npz", result.profile)
    result.history_csv(output / "history.csv")

    status = Status.PASS if result.converged else Status.FAIL
    print_section(f"{'✅' if result.converged else '❌'} groundstate: {status.value.upper()}")
    print(f"   - 반복: {result.iterations}")
    print(f"   - 질량: {[round(float(m), 10) for m in result.report.M_i]}")
    print(f"   - 승수 ω: {list(result.multipliers)}")
    print(f"   - 작용 S: {result.report.S:.10g}")
    print(f"   - 분류: {result.classification.to_dict() if result.classification else None}")
    print(f"   📁 {output}")
    return status.exit_code


def cmd_evolve(cfg: LabConfig, args: argparse.Namespace, output: Path) -> int:
    params = cfg.model_params()
    stepper = cfg.stepper_config()
    if args.initial:
        V0 = load_snapshot(args.initial)
    else:
        V0 = ground_state(params, cfg.flow_config(seed=args.seed)).profile
        lam = cfg.experiment.get("dilation")
        if lam is not None:
            V0 = dilation(V0, float(lam))
        V0 = V0 * float(cfg.experiment.get("amplitude", 1.0))

    trace = evolve(V0, params, stepper)
    output.mkdir(parents=True, exist_ok=True)
    save_snapshot(output / "initial.npz", V0)
    save_snapshot(output / "final.npz", trace.final_state)
    trace.to_csv(output / "trace.csv")
    (output / "summary.json").write_text(trace.to_json(), encoding="utf-8")

    status = Status.INCONCLUSIVE if trace.tail_violation else Status.PASS
    print_section(f"{'⚠️' if trace.tail_violation else '✅'} evolve: t = {trace.final_time:.6g}")
    print(f"   - 폭발: {trace.blowup_detected} ({trace.blowup_reason})")
    print(f"   - 질량 표류: {trace.mass_drift().tolist()}")
    print(f"   - 에너지 표류: {trace.energy_drift():.3e}")
    print(f"   📁 {output}")
    return status.exit_code


def _experiment_kind(command: str, cfg: LabConfig) -> ExperimentKind:
    configured = cfg.experiment.get("kind")
    if command == "stability":
        if configured == ExperimentKind.PER_COMPONENT_STABILITY.value:
            return ExperimentKind.PER_COMPONENT_STABILITY
        return ExperimentKind.STABILITY
    if command == "blowup":
        regime = cfg.model_params().regime
        if regime is Regime.CRITICAL:
            return ExperimentKind.CRITICAL_BLOWUP
        return ExperimentKind.SUPERCRITICAL_BLOWUP
    if command == "identities":
        return ExperimentKind.IDENTITY_SUITE
    return ExperimentKind.GN_SUITE


def cmd_experiment(cfg: LabConfig, args: argparse.Namespace, output: Path) -> int:
    spec = cfg.experiment_spec(kind=_experiment_kind(args.command, cfg), seed=args.seed)
    outcome = run_experiment(spec)
    outcome.save(output)
    print_outcome(outcome)
    return outcome.exit_code


def cmd_sweep(cfg: LabConfig, args: argparse.Namespace, output: Path) -> int:
    jobs = cfg.sweep_jobs()
    specs = [job.experiment_spec(seed=args.seed) for job in jobs]
    results = run_sweep(specs, output, max_concurrent=cfg.max_concurrent)
    for job, result in zip(jobs, results):
        job.dump(Path(result.output_dir) / CONFIG_USED_NAME)

    print_section(f"📊 sweep: {len(results)}개 작업")
    for r in results:
        icon = {"pass": "✅", "fail": "❌"}.get(r.status, "⚠️")
        print(f"   {icon} [{r.index:03d}] {r.kind:24} {r.status:12} {r.elapsed_sec:8.1f}s")
        if r.error:
            print(f"         {r.error}")
    print(f"   📁 {output / 'sweep.csv'}")
    return max(r.exit_code for r in results)


COMMANDS = {
    "groundstate": cmd_groundstate,
    "evolve": cmd_evolve,
    "stability": cmd_experiment,
    "blowup": cmd_experiment,
    "identities": cmd_experiment,
    "gn-check": cmd_experiment,
    "sweep": cmd_sweep,
}


# =============================================================================
# 진입점
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mnls-lab",
        description="결합 비선형 슈뢰딩거 방정식 수치 실험",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML 설정 파일")
    common.add_argument("--seed", type=int, default=None, help="난수 시드 (설정 값 대신)")
    common.add_argument("--output", type=Path, default=None, help="출력 디렉터리")
    common.add_argument("--verbose", action="store_true", help="DEBUG 로그 출력")

    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "evolve":
            p.add_argument("--initial", type=Path, default=None, help="초기 필드 스냅샷 (.npz)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s [%(levelname)s] %(message)s",
    )

    try:
        cfg = load_config(args.config) if args.config else config_from_dict({})
        output = args.output or DEFAULT_OUTPUT_ROOT / args.command
        code = COMMANDS[args.command](cfg, args, output)
        cfg.dump(Path(output) / CONFIG_USED_NAME)
        return code
    except ConfigError as e:
        logger.error("설정 오류: %s", e)
        return EXIT_USAGE
    except LabError as e:
        logger.error("실행 오류 (%s): %s", type(e).__name__, e)
        return EXIT_USAGE if isinstance(e, ValueError) else Status.FAIL.exit_code


if __name__ == "__main__":
    sys.exit(main())
