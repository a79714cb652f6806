"""
다이어그램 생성 테스트

dot 실행 파일 없이 graphviz 소스만 만들어 다음을 확인합니다:
1. 클래스 다이어그램에 주요 데이터 클래스가 모두 있는지
2. 흐름도와 의존 관계도의 간선
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from generate_diagram import create_class_diagram, create_data_flow_diagram, create_flow_diagram


def test_class_diagram_nodes():
    source = create_class_diagram().source
    for name in ("GridSpec", "FieldVec", "ModelParams", "GroundStateResult", "EvolutionTrace", "ExperimentOutcome"):
        assert name in source


def test_flow_diagram_branches_on_regime():
    source = create_flow_diagram().source
    assert "regime -> minimize" in source
    assert "regime -> nehari" in source


def test_dependency_diagram_edges():
    source = create_data_flow_diagram().source
    assert "cli -> cfg" in source
    assert "exp -> dyn" in source


def main():
    """메인 함수"""
    print("=" * 70)
    print("다이어그램 생성 테스트")
    print("=" * 70)
    for test in (test_class_diagram_nodes, test_flow_diagram_branches_on_regime, test_dependency_diagram_edges):
        try:
            test()
            print(f"   ✅ {test.__name__}")
        except AssertionError as e:
            print(f"   ❌ {test.__name__}: {e}")


if __name__ == "__main__":
    main()
