"""
mnls_lab 다이어그램 생성 스크립트

이 스크립트는 mnls_lab 패키지의 데이터 클래스, 실험 흐름, 모듈 의존 관계를 시각화합니다.
graphviz가 설치되어 있어야 합니다.

설치: pip install graphviz
시스템 설치: brew install graphviz (macOS)
"""

from graphviz import Digraph
from pathlib import Path


def create_class_diagram():
    """클래스 다이어그램 생성"""
    dot = Digraph(comment='mnls_lab Class Diagram')
    dot.attr(rankdir='TB', splines='ortho')
    dot.attr('node', shape='record', fontname='Helvetica', fontsize='10')
    dot.attr('edge', fontname='Helvetica', fontsize='9')

    # 필드 클래스들 (노란색 계열)
    with dot.subgraph(name='cluster_field') as c:
        c.attr(label='필드 클래스', style='filled', color='#FFF8E1', fontname='Helvetica-Bold')

        c.node('GridSpec', '''GridSpec|
dim: int\\l
points: tuple[int]\\l
box_length: tuple[float]\\l|
+ coords(): list\\l
+ wavenumbers(): list\\l
+ shell_mask(): ndarray\\l''')

        c.node('ComponentField', '''ComponentField|
values: ndarray\\l
grid: GridSpec\\l''')

        c.node('FieldVec', '''FieldVec|
data: ndarray (M, *shape)\\l
grid: GridSpec\\l|
+ component(i)\\l
+ scaled(factors)\\l''')

    # 모델 클래스들 (녹색 계열)
    with dot.subgraph(name='cluster_model') as c:
        c.attr(label='모델 클래스', style='filled', color='#E8F5E9', fontname='Helvetica-Bold')

        c.node('ModelParams', '''ModelParams|
p: float\\l
coupling: ndarray\\l
dim: int\\l
reg_eps: float\\l|
+ regime: Regime\\l''')

        c.node('FunctionalReport', '''FunctionalReport|
M, T, J, I: float\\l
E, H, S: float\\l
M_i, T_i, J_i: list\\l|
+ to_json(): str\\l''')

        c.node('FlowConfig', '''FlowConfig|
grid: GridSpec\\l
tau: float\\l
max_iter: int\\l
initializer: Initializer\\l''')

        c.node('GroundStateResult', '''GroundStateResult|
profile: FieldVec\\l
multipliers: ndarray\\l
report: FunctionalReport\\l
classification: StructureTags\\l|
+ to_json(): str\\l
+ history_csv()\\l''')

    # 실험 클래스 (파란색 계열)
    with dot.subgraph(name='cluster_experiment') as c:
        c.attr(label='실험 클래스', style='filled', color='#E3F2FD', fontname='Helvetica-Bold')

        c.node('StepperConfig', '''StepperConfig|
dt: float\\l
t_end: float\\l
dt_min: float\\l
record_stride: int\\l''')

        c.node('EvolutionTrace', '''EvolutionTrace|
times: list\\l
energy, pohozaev: list\\l
monitors: dict\\l
blowup_detected: bool\\l
tail_violation: bool\\l|
+ to_csv()\\l''')

        c.node('ExperimentSpec', '''ExperimentSpec|
kind: ExperimentKind\\l
params: ModelParams\\l
epsilon: float\\l
thresholds: dict\\l''')

        c.node('ExperimentOutcome', '''ExperimentOutcome|
status: Status\\l
measured: dict\\l
checks: dict\\l
trace: EvolutionTrace\\l|
+ save(output_dir)\\l
+ exit_code: int\\l''')

    # 관계
    dot.edge('ComponentField', 'GridSpec', label='grid')
    dot.edge('FieldVec', 'GridSpec', label='grid')
    dot.edge('FlowConfig', 'GridSpec', label='grid')
    dot.edge('GroundStateResult', 'FieldVec', label='profile')
    dot.edge('GroundStateResult', 'FunctionalReport', label='report')
    dot.edge('EvolutionTrace', 'FieldVec', label='final_state')
    dot.edge('ExperimentSpec', 'ModelParams', label='params')
    dot.edge('ExperimentSpec', 'FlowConfig', label='flow')
    dot.edge('ExperimentSpec', 'StepperConfig', label='stepper')
    dot.edge('ExperimentOutcome', 'EvolutionTrace', label='trace')

    return dot


def create_flow_diagram():
    """실험 실행 흐름도 생성"""
    dot = Digraph(comment='Experiment Flow')
    dot.attr(rankdir='TB')
    dot.attr('node', fontname='Helvetica', fontsize='10')

    dot.node('start', 'YAML 설정\n(load_config)', shape='ellipse', style='filled', fillcolor='#C8E6C9')
    dot.node('spec', 'ExperimentSpec 생성\n(영역 검증)', shape='box', style='filled', fillcolor='#FFF9C4')
    dot.node('regime', '영역?', shape='diamond', style='filled', fillcolor='#FFE0B2')
    dot.node('minimize', '질량 제약 최소화\n+ 스케일 변환', shape='box', style='filled', fillcolor='#E1F5FE')
    dot.node('nehari', 'Nehari 흐름', shape='box', style='filled', fillcolor='#E1F5FE')
    dot.node('initial', '초기 데이터\n(섭동 / 확대 / 진폭)', shape='box', style='filled', fillcolor='#F3E5F5')
    dot.node('evolve', 'Strang 분할 전개\n(dt 조정, 플래그)', shape='box', style='filled', fillcolor='#F3E5F5')
    dot.node('diag', '진단\n(궤도 거리 / 분산 / Virial)', shape='box', style='filled', fillcolor='#F3E5F5')
    dot.node('verdict', '판정\n(PASS / FAIL / INCONCLUSIVE)', shape='box', style='filled', fillcolor='#FFCDD2')
    dot.node('end', 'summary.json\ntrace.csv / *.npz', shape='ellipse', style='filled', fillcolor='#C8E6C9')

    dot.edge('start', 'spec')
    dot.edge('spec', 'regime')
    dot.edge('regime', 'minimize', label='p < 2/N')
    dot.edge('regime', 'nehari', label='p ≥ 2/N')
    dot.edge('minimize', 'initial')
    dot.edge('nehari', 'initial')
    dot.edge('initial', 'evolve')
    dot.edge('evolve', 'diag', label='기록마다')
    dot.edge('diag', 'verdict')
    dot.edge('verdict', 'end')

    return dot


def create_data_flow_diagram():
    """모듈 의존 관계도 생성"""
    dot = Digraph(comment='Module Dependencies')
    dot.attr(rankdir='LR')
    dot.attr('node', shape='box', fontname='Helvetica', fontsize='10', style='filled')

    dot.node('errors', 'errors.py', fillcolor='#ECEFF1')
    dot.node('field', 'field_core.py', fillcolor='#FFF8E1')
    dot.node('func', 'functionals.py', fillcolor='#E8F5E9')
    dot.node('diag', 'diagnostics.py', fillcolor='#E8F5E9')
    dot.node('gs', 'groundstate.py', fillcolor='#E3F2FD')
    dot.node('dyn', 'dynamics.py', fillcolor='#E3F2FD')
    dot.node('exp', 'experiments.py', fillcolor='#F3E5F5')
    dot.node('cfg', 'config.py', fillcolor='#F3E5F5')
    dot.node('cli', 'cli.py', fillcolor='#FFCDD2')

    dot.edge('field', 'errors')
    dot.edge('func', 'field')
    dot.edge('diag', 'field')
    dot.edge('gs', 'func')
    dot.edge('gs', 'diag')
    dot.edge('dyn', 'func')
    dot.edge('exp', 'gs')
    dot.edge('exp', 'dyn')
    dot.edge('exp', 'diag')
    dot.edge('cfg', 'exp')
    dot.edge('cli', 'cfg')
    dot.edge('cli', 'exp')

    return dot


def main():
    """메인 함수"""
    output_dir = Path(__file__).parent / "diagrams"
    output_dir.mkdir(exist_ok=True)

    print("📊 다이어그램 생성 중...")

    # 클래스 다이어그램
    print("  1. 클래스 다이어그램...")
    class_diagram = create_class_diagram()
    class_diagram.render(output_dir / 'class_diagram', format='png', cleanup=True)
    class_diagram.render(output_dir / 'class_diagram', format='svg', cleanup=True)

    # 실험 흐름도
    print("  2. 실험 흐름도...")
    flow_diagram = create_flow_diagram()
    flow_diagram.render(output_dir / 'experiment_flow', format='png', cleanup=True)
    flow_diagram.render(output_dir / 'experiment_flow', format='svg', cleanup=True)

    # 모듈 의존 관계도
    print("  3. 모듈 의존 관계도...")
    data_flow = create_data_flow_diagram()
    data_flow.render(output_dir / 'module_dependencies', format='png', cleanup=True)
    data_flow.render(output_dir / 'module_dependencies', format='svg', cleanup=True)

    print(f"\n✅ 다이어그램 저장 완료: {output_dir}/")
    print("   - class_diagram.png/svg")
    print("   - experiment_flow.png/svg")
    print("   - module_dependencies.png/svg")


if __name__ == "__main__":
    try:
        main()
    except ImportError:
        print("❌ graphviz 라이브러리가 설치되어 있지 않습니다.")
        print("   설치 방법:")
        print("   1. pip install graphviz")
        print("   2. brew install graphviz  (macOS)")
        print("   3. apt install graphviz   (Linux)")
