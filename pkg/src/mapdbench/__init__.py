"""mapdbench: a grid-warehouse pickup-and-delivery benchmark suite.

Four layers, importable separately:

``warehouse``
    the seedable simulator (maps, agents, request queue, joint moves)
``mapf``
    planning graphs, constrained space-time search, conflict detection
``cbs``
    optimal single-shot multi-agent solver over a constraint tree
``lifelong`` / ``bench``
    the replanning orchestrator and the metrics/CSV harness

See the demos/ directory of the repository for narrative walkthroughs.
"""

from .warehouse import (
    AgentState,
    DeliveryEvent,
    EdgeSwapError,
    IllegalMoveError,
    MapFormatError,
    Move,
    MoveContractError,
    Phase,
    PickupEvent,
    RequestQueue,
    SpawnEvent,
    VertexCollisionError,
    WarehouseMap,
    WorldState,
    apply_joint_moves,
    init_episode,
    legal_moves,
    load_fixture,
    load_map,
)
from .mapf import (
    Conflict,
    Constraint,
    EdgeConflict,
    EdgeConstraint,
    Path,
    PlanningGraph,
    VertexConflict,
    VertexConstraint,
    agent_view,
    detect_conflicts,
    space_time_search,
    split_conflict,
)
from .cbs import (
    CBSResult,
    CTNode,
    MAPFInstance,
    SolveStatus,
    SolverBudget,
    cbs_solve,
    expand_node,
    make_root,
)
from .lifelong import (
    Assignment,
    GoalKind,
    LifelongConfig,
    PlanCache,
    StepReport,
    assign_delivery,
    assign_pickup,
    step_episode,
    trace_record,
)
from .bench import (
    BenchConfig,
    EpisodeMetrics,
    EpisodeRow,
    Trace,
    emit_csv,
    load_trace,
    parse_csv,
    render_ascii,
    resolve_map,
    run_episode,
    run_episode_with_trace,
    run_suite,
    summarize,
    write_trace,
)

__version__ = "0.1.0"
