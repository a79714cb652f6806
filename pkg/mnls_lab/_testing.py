"""
테스트 공용 도우미

스크립트로 직접 실행할 때 쓰는 main() 실행기와, 여러 테스트 모듈이
공유하는 (비싼) 기저 상태 캐시를 제공합니다.
"""

from __future__ import annotations

import contextlib
import inspect
import tempfile
import traceback
from functools import cache
from pathlib import Path

import numpy as np

from .field_core import FieldVec, GridSpec, reference_soliton
from .functionals import ModelParams
from .groundstate import FlowConfig, GroundStateResult, ground_state

TEST_GRID = GridSpec(dim=1, points=512, box_length=40.0)


def print_section(title: str) -> None:
    print("=" * 70)
    print(title)
    print("=" * 70)


def run_module_tests(namespace: dict, title: str) -> int:
    """namespace 의 test_* 함수를 차례로 실행하고 ✅/❌ 요약 출력"""
    print_section(title)
    tests = [(name, fn) for name, fn in namespace.items() if name.startswith("test_") and callable(fn)]
    failed = 0
    for name, fn in tests:
        try:
            params = inspect.signature(fn).parameters
            with contextlib.ExitStack() as stack:
                kwargs = {}
                if "tmp_path" in params:
                    kwargs["tmp_path"] = Path(stack.enter_context(tempfile.TemporaryDirectory()))
                if "monkeypatch" in params:
                    import pytest

                    kwargs["monkeypatch"] = stack.enter_context(pytest.MonkeyPatch.context())
                fn(**kwargs)
            print(f"   ✅ {name}")
        except Exception as e:
            failed += 1
            print(f"   ❌ {name}: {type(e).__name__}: {e}")
            traceback.print_exc()
    print(f"\n{len(tests) - failed}/{len(tests)} 통과")
    return 1 if failed else 0


def soliton(p: float = 1.0, grid: GridSpec = TEST_GRID) -> FieldVec:
    """닫힌 형태 1차원 스칼라 기저 상태"""
    return FieldVec.from_components([reference_soliton(grid, p)])


@cache
def cached_ground_state(p: float, coupling: tuple[tuple[float, ...], ...], points: int = 512) -> GroundStateResult:
    """(p, K, 격자 점 수) 별 기저 상태 (테스트 모듈 사이에서 재사용)"""
    grid = GridSpec(dim=1, points=points, box_length=40.0)
    params = ModelParams(p=p, coupling=np.array(coupling, dtype=float))
    return ground_state(params, FlowConfig(grid=grid))
