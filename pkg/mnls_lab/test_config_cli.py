"""
config / CLI 테스트

이 스크립트는 다음을 테스트합니다:
1. YAML 설정 읽기와 키 검증
2. 도메인 객체 생성 오류의 ConfigError 변환
3. sweep.jobs 병합과 config_used.yaml 재현
4. 명령행 종료 코드와 산출물
"""

import json
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

sys.path.insert(0, str(Path(__file__).parent.parent))

from mnls_lab._testing import run_module_tests
from mnls_lab.cli import main as cli_main
from mnls_lab.config import CONFIG_USED_NAME, config_from_dict, load_config
from mnls_lab.errors import ConfigError
from mnls_lab.experiments import ExperimentKind
from mnls_lab.groundstate import PerComponentMass

BASE = {
    "grid": {"dim": 1, "points": 512, "box_length": 40.0},
    "params": {"p": 1.0, "coupling": [[1.0]]},
    "experiment": {"kind": "identity_suite", "n_random": 10},
}


def write_config(tmp_path: Path, data: dict, name: str = "config.yaml") -> Path:
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data, allow_unicode=True), encoding="utf-8")
    return path


def test_load_config_builds_objects(tmp_path):
    data = {**BASE, "flow": {"tol": 1e-8}, "stepper": {"dt": 5e-4, "t_end": 2.0}}
    cfg = load_config(write_config(tmp_path, data))
    assert cfg.grid_spec().points == (512,)
    assert cfg.model_params().p == 1.0
    assert cfg.flow_config(seed=4).seed == 4
    assert cfg.stepper_config().dt == 5e-4
    spec = cfg.experiment_spec()
    assert spec.kind is ExperimentKind.IDENTITY_SUITE
    assert spec.n_random == 10
    assert spec.t_end == 2.0 and spec.stepper.dt == 5e-4


def test_unknown_keys_are_rejected(tmp_path):
    with pytest.raises(ConfigError):
        config_from_dict({**BASE, "solver": {}})
    with pytest.raises(ConfigError):
        config_from_dict({**BASE, "grid": {"dim": 1, "size": 64}})
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("grid: [1, 2\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_domain_errors_become_config_errors():
    with pytest.raises(ConfigError):
        config_from_dict({"grid": BASE["grid"]}).model_params()
    with pytest.raises(ConfigError):
        config_from_dict({**BASE, "grid": {"points": 1000}}).grid_spec()
    with pytest.raises(ConfigError):
        config_from_dict({**BASE, "params": {"p": 3.0}}).experiment_spec(kind="stability")
    with pytest.raises(ConfigError):
        config_from_dict({**BASE, "experiment": {}}).experiment_spec()


def test_constraint_section():
    cfg = config_from_dict({**BASE, "constraint": {"kind": "per_component", "values": [8.0, 8.0]}})
    constraint = cfg.constraint_spec()
    assert isinstance(constraint, PerComponentMass)
    assert tuple(constraint.values) == (8.0, 8.0)


def test_sweep_jobs_merge_over_base():
    data = {
        **BASE,
        "sweep": {"max_concurrent": 2, "jobs": [
            {"experiment": {"kind": "gn_suite"}},
            {"params": {"p": 2.0}, "experiment": {"n_random": 3}},
        ]},
    }
    cfg = config_from_dict(data)
    jobs = cfg.sweep_jobs()
    assert cfg.max_concurrent == 2
    assert jobs[0].experiment == {"kind": "gn_suite", "n_random": 10}
    assert jobs[1].model_params().p == 2.0
    assert jobs[1].experiment["kind"] == "identity_suite"
    assert jobs[1].grid == BASE["grid"]
    assert not jobs[0].sweep
    with pytest.raises(ConfigError):
        config_from_dict({**BASE, "sweep": {"jobs": [{"unknown": {}}]}}).sweep_jobs()
    with pytest.raises(ConfigError):
        config_from_dict(BASE).sweep_jobs()


def test_dump_round_trip(tmp_path):
    cfg = config_from_dict({**BASE, "params": {"p": 1.0, "coupling": [[1.0, 0.5], [0.5, 1.0]]}})
    path = cfg.dump(tmp_path / CONFIG_USED_NAME)
    again = load_config(path)
    assert again.to_dict() == cfg.to_dict()
    assert np.array_equal(again.model_params().coupling, cfg.model_params().coupling)


def test_cli_identities_writes_outputs(tmp_path):
    path = write_config(tmp_path, BASE)
    out = tmp_path / "out"
    code = cli_main(["identities", "--config", str(path), "--output", str(out), "--seed", "1"])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["kind"] == "identity_suite" and summary["status"] == "pass"
    assert summary["spec"]["seed"] == 1
    assert (out / CONFIG_USED_NAME).exists()
    assert (out / "ground_state.npz").exists()


def test_cli_groundstate(tmp_path):
    path = write_config(tmp_path, BASE)
    out = tmp_path / "gs"
    assert cli_main(["groundstate", "--config", str(path), "--output", str(out)]) == 0
    for name in ("summary.json", "profile.npz", "history.csv", CONFIG_USED_NAME):
        assert (out / name).exists()


def test_cli_usage_errors(tmp_path):
    assert cli_main(["gn-check", "--output", str(tmp_path / "x")]) == 3
    assert cli_main(["no-such-command"]) == 3
    assert cli_main(["stability", "--seed", "abc"]) == 3
    bad = write_config(tmp_path, {**BASE, "params": {"p": 3.0}}, name="bad.yaml")
    assert cli_main(["stability", "--config", str(bad), "--output", str(tmp_path / "y")]) == 3


def main():
    return run_module_tests(globals(), "config / CLI 테스트")


if __name__ == "__main__":
    sys.exit(main())
