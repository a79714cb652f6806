"""
Config - YAML 실행 설정 로더

주요 기능:
    - load_config: YAML 파일을 LabConfig 로 읽기 (알 수 없는 키는 ConfigError)
    - LabConfig: 격자/파라미터/흐름/적분기/실험 객체 생성
    - LabConfig.dump: 실제 사용한 설정을 config_used.yaml 로 기록

사용 예시:
    from mnls_lab.config import load_config

    cfg = load_config("runs/stability.yaml")
    spec = cfg.experiment_spec()
    cfg.dump("runs/out/config_used.yaml")
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .dynamics import StepperConfig
from .errors import ConfigError, LabError
from .experiments import ExperimentKind, ExperimentSpec
from .field_core import GridSpec
from .functionals import ModelParams
from .groundstate import ConstraintSpec, FlowConfig, constraint_from_dict

logger = logging.getLogger(__name__)


# =============================================================================
# 상수 정의
# =============================================================================

SECTION_KEYS: dict[str, frozenset[str]] = {
    "grid": frozenset({"dim", "points", "box_length"}),
    "params": frozenset({"p", "coupling", "reg_eps"}),
    "constraint": frozenset({"kind", "values"}),
    "flow": frozenset({
        "tau", "max_iter", "tol", "shift", "mass_floor_ratio",
        "initializer", "seed", "mass_guess", "log_every",
    }),
    "stepper": frozenset({
        "dt", "t_end", "dt_min", "blowup_gradient_factor", "tail_tolerance",
        "record_stride", "energy_jump_tol", "resolution_tolerance", "adaptive",
    }),
    "experiment": frozenset({
        "kind", "epsilon", "dilation", "amplitude", "t_end", "thresholds", "seed",
        "subset", "variant", "family", "n_random", "n_seeds",
    }),
    "sweep": frozenset({"max_concurrent", "jobs"}),
}

CONFIG_USED_NAME = "config_used.yaml"
DEFAULT_MAX_CONCURRENT = 4


# =============================================================================
# 데이터 클래스
# =============================================================================

@dataclass
class LabConfig:
    """
    검증된 설정 섹션 모음

    각 섹션은 YAML 의 키-값 그대로 보관하고, 필요할 때 도메인 객체로 만듭니다.
    빠진 섹션은 각 데이터 클래스의 기본값을 씁니다.
    """
    grid: dict[str, Any] = field(default_factory=dict)
    params: dict[str, Any] = field(default_factory=dict)
    constraint: dict[str, Any] = field(default_factory=dict)
    flow: dict[str, Any] = field(default_factory=dict)
    stepper: dict[str, Any] = field(default_factory=dict)
    experiment: dict[str, Any] = field(default_factory=dict)
    sweep: dict[str, Any] = field(default_factory=dict)
    source: Path | None = None

    def grid_spec(self) -> GridSpec:
        return _build("grid", GridSpec.from_dict, self.grid)

    def model_params(self) -> ModelParams:
        if "p" not in self.params:
            raise ConfigError("params.p 가 필요합니다")
        return _build("params", lambda d: ModelParams.from_dict(d, dim=self.grid_spec().dim), self.params)

    def constraint_spec(self) -> ConstraintSpec:
        return _build("constraint", constraint_from_dict, self.constraint)

    def flow_config(self, seed: int | None = None) -> FlowConfig:
        data = dict(self.flow)
        if seed is not None:
            data["seed"] = seed
        return _build("flow", lambda d: FlowConfig(grid=self.grid_spec(), **d), data)

    def stepper_config(self) -> StepperConfig:
        return _build("stepper", StepperConfig.from_dict, self.stepper)

    def experiment_spec(self, kind: ExperimentKind | str | None = None, seed: int | None = None) -> ExperimentSpec:
        """
        실험 정의 생성

        Args:
            kind: 설정 파일의 experiment.kind 대신 쓸 종류 (CLI 하위 명령)
            seed: 설정 파일의 시드 대신 쓸 값 (--seed)
        """
        data = dict(self.experiment)
        if kind is not None:
            data["kind"] = kind
        if "kind" not in data:
            raise ConfigError("experiment.kind 가 필요합니다")
        if seed is not None:
            data["seed"] = seed
        data.setdefault("seed", 0)

        stepper = self.stepper_config()
        if "t_end" not in data and "t_end" in self.stepper:
            data["t_end"] = stepper.t_end

        def build(d: dict) -> ExperimentSpec:
            return ExperimentSpec(
                params=self.model_params(),
                grid=self.grid_spec(),
                flow=self.flow_config(seed=d["seed"]),
                stepper=stepper if self.stepper else None,
                **d,
            )

        return _build("experiment", build, data)

    def sweep_jobs(self) -> list["LabConfig"]:
        """sweep.jobs 의 각 항목을 기본 섹션 위에 덮어쓴 설정 목록"""
        jobs = self.sweep.get("jobs") or []
        if not isinstance(jobs, list) or not jobs:
            raise ConfigError("sweep.jobs 에 작업 목록이 필요합니다")
        base = self.to_dict()
        base.pop("sweep", None)
        configs = []
        for i, job in enumerate(jobs):
            if not isinstance(job, dict):
                raise ConfigError(f"sweep.jobs[{i}] 는 매핑이어야 합니다")
            merged = copy.deepcopy(base)
            for section, values in job.items():
                if section not in SECTION_KEYS or section == "sweep":
                    raise ConfigError(f"sweep.jobs[{i}] 의 알 수 없는 섹션입니다: {section}")
                if not isinstance(values, dict):
                    raise ConfigError(f"sweep.jobs[{i}].{section} 는 매핑이어야 합니다")
                merged.setdefault(section, {}).update(values)
            configs.append(config_from_dict(merged, source=self.source))
        return configs

    @property
    def max_concurrent(self) -> int:
        value = int(self.sweep.get("max_concurrent", DEFAULT_MAX_CONCURRENT))
        if value < 1:
            raise ConfigError(f"sweep.max_concurrent 는 1 이상이어야 합니다: {value}")
        return value

    def to_dict(self) -> dict[str, Any]:
        sections = {name: getattr(self, name) for name in SECTION_KEYS}
        return {name: copy.deepcopy(values) for name, values in sections.items() if values}

    def dump(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(yaml.safe_dump(self.to_dict(), allow_unicode=True, sort_keys=False), encoding="utf-8")
        return path


# =============================================================================
# 함수
# =============================================================================

def _build(section: str, factory, data: dict):
    """도메인 객체 생성 중 발생한 검증 오류를 ConfigError 로 변환"""
    try:
        return factory(dict(data))
    except ConfigError:
        raise
    except (LabError, ValueError, TypeError, KeyError) as e:
        raise ConfigError(f"{section} 섹션이 올바르지 않습니다: {e}") from e


def config_from_dict(data: dict | None, source: Path | None = None) -> LabConfig:
    """키 검증 후 LabConfig 생성"""
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError(f"설정 최상위는 매핑이어야 합니다: {type(data).__name__}")
    unknown = set(data) - set(SECTION_KEYS)
    if unknown:
        raise ConfigError(f"알 수 없는 설정 섹션입니다: {sorted(unknown)}")
    sections = {}
    for name, allowed in SECTION_KEYS.items():
        values = data.get(name) or {}
        if not isinstance(values, dict):
            raise ConfigError(f"{name} 섹션은 매핑이어야 합니다")
        extra = set(values) - allowed
        if extra:
            raise ConfigError(f"{name} 섹션의 알 수 없는 키입니다: {sorted(extra)}")
        sections[name] = dict(values)
    return LabConfig(**sections, source=source)


def load_config(path: str | Path) -> LabConfig:
    """
    YAML 설정 파일 읽기

    Raises:
        ConfigError: 파일이 없거나 YAML 이 잘못되었거나 알 수 없는 키가 있을 때
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"설정 파일을 찾을 수 없습니다: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ConfigError(f"YAML 파싱 실패: {e}") from e
    logger.debug("설정 읽음: %s", path)
    return config_from_dict(data, source=path)

