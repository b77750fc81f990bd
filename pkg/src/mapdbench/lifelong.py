"""Lifelong pickup-and-delivery orchestration on top of the CBS solver.

The loop per step: hand a fresh goal to every agent whose previous goal
was consumed (picked up, delivered, or episode start), re-solve the whole
team with CBS whenever at least one goal changed, then execute one step of
the cached paths and apply it to the warehouse.  A failed solve makes
everyone wait for a step and is retried with a fresh conflict-choice seed;
ten consecutive failures mark the episode degraded (but it keeps running).

Seeking agents are assigned the nearest untaken requested item (ties to
the lowest item id); carrying agents the nearest unreserved delivery cell
(ties to the lowest column), so goal cells stay pairwise distinct.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum

from . import warehouse
from .cbs import CBSResult, MAPFInstance, SolveStatus, SolverBudget, cbs_solve
from .mapf import Path, PlanningGraph, agent_view
from .warehouse import (
    Cell,
    DeliveryEvent,
    Event,
    Move,
    Phase,
    PickupEvent,
    WorldState,
    apply_joint_moves,
    move_between,
)

MAX_CONSECUTIVE_FAILURES = 10


class GoalKind(Enum):
    PICKUP = "pickup"
    DELIVER = "deliver"


@dataclass(frozen=True)
class Assignment:
    agent_id: int
    kind: GoalKind
    goal_cell: Cell
    item_id: int | None = None


@dataclass
class LifelongConfig:
    budget: SolverBudget = field(default_factory=SolverBudget)


@dataclass
class PlanCache:
    """Team plan currently being executed, plus replanning bookkeeping."""

    paths: list[Path]
    valid_from: int
    assignments: list[Assignment | None]
    solver_rng: random.Random
    pending_retry: bool = False
    consecutive_failures: int = 0
    degraded: bool = False
    replans: int = 0

    @classmethod
    def fresh(cls, n_agents: int, solver_seed: int) -> "PlanCache":
        return cls(
            paths=[],
            valid_from=0,
            assignments=[None] * n_agents,
            solver_rng=random.Random(solver_seed),
        )


@dataclass
class StepReport:
    step: int
    replanned: bool
    replan_wall_secs: float
    expansions: int
    solver_status: SolveStatus | None
    replan_failed: bool
    degraded: bool
    events: list[Event]


def _reachable_distances(graph: PlanningGraph, origin: Cell) -> dict[Cell, int]:
    # BFS from the agent's position; origin may sit one step outside the
    # base view (e.g. on a delivery cell it is always inside).
    from collections import deque

    table = {origin: 0}
    frontier = deque([origin])
    while frontier:
        cur = frontier.popleft()
        d = table[cur] + 1
        x, y = cur
        for nxt in ((x, y - 1), (x, y + 1), (x - 1, y), (x + 1, y)):
            if nxt in graph.cells and nxt not in table:
                table[nxt] = d
                frontier.append(nxt)
    return table


def _distance_to_shelf(grid: warehouse.WarehouseMap, dist: dict[Cell, int], cell: Cell) -> float:
    """Distance to a shelf cell reachable only through its open neighbors."""
    if cell in dist:
        return dist[cell]
    x, y = cell
    best = float("inf")
    for nxt in ((x, y - 1), (x, y + 1), (x - 1, y), (x + 1, y)):
        d = dist.get(nxt)
        if d is not None and d + 1 < best:
            best = d + 1
    return best


def assign_pickup(state: WorldState, agent_id: int, taken: set[int]) -> Assignment:
    """Nearest untaken requested item for a seeking agent; ties break to the
    lowest item id."""
    agent = state.agents[agent_id]
    if agent.phase is not Phase.SEEKING:
        raise ValueError(f"agent {agent_id} is not seeking")
    base = agent_view(state.map, None)
    dist = _reachable_distances(base, agent.pos)
    best: tuple[float, int] | None = None
    for item_id in sorted(state.queue.items):
        if item_id in taken:
            continue
        d = _distance_to_shelf(state.map, dist, state.queue.items[item_id])
        if d == float("inf"):
            continue
        if best is None or (d, item_id) < best:
            best = (d, item_id)
    if best is None:
        raise RuntimeError(f"no reachable unassigned item for agent {agent_id}")
    item_id = best[1]
    return Assignment(agent_id, GoalKind.PICKUP, state.queue.items[item_id], item_id)


def assign_delivery(state: WorldState, agent_id: int, reserved: set[Cell]) -> Assignment:
    """Nearest unreserved delivery cell for a carrying agent; ties break to
    the lowest column index."""
    agent = state.agents[agent_id]
    if agent.phase is not Phase.CARRYING:
        raise ValueError(f"agent {agent_id} is not carrying")
    own_cell = state.queue.items.get(agent.item_id) if agent.item_id is not None else None
    view = agent_view(state.map, own_cell, enterable=False)
    dist = _reachable_distances(view, agent.pos)
    best: tuple[int, int] | None = None
    goal: Cell | None = None
    for cell in sorted(state.map.delivery_cells):
        if cell in reserved:
            continue
        d = dist.get(cell)
        if d is None:
            continue
        key = (d, cell[0])
        if best is None or key < best:
            best = key
            goal = cell
    if goal is None:
        raise RuntimeError(f"no reachable unreserved delivery cell for agent {agent_id}")
    return Assignment(agent_id, GoalKind.DELIVER, goal)


def _refresh_assignments(state: WorldState, cache: PlanCache) -> bool:
    changed = False
    taken = {a.item_id for a in state.agents if a.item_id is not None}
    reserved = {
        asg.goal_cell
        for asg in cache.assignments
        if asg is not None and asg.kind is GoalKind.DELIVER
    }
    for agent in state.agents:
        current = cache.assignments[agent.id]
        if agent.phase is Phase.SEEKING:
            if agent.item_id is not None and current is not None:
                continue
            asg = assign_pickup(state, agent.id, taken)
            taken.add(asg.item_id)
            cache.assignments[agent.id] = asg
            agent.item_id = asg.item_id
            changed = True
        else:
            if current is not None and current.kind is GoalKind.DELIVER:
                continue
            asg = assign_delivery(state, agent.id, reserved)
            reserved.add(asg.goal_cell)
            cache.assignments[agent.id] = asg
            changed = True
    return changed


def build_instance(state: WorldState, cache: PlanCache) -> MAPFInstance:
    """Single-shot instance from the agents' current positions and goals."""
    graphs = []
    starts = []
    goals = []
    for agent in state.agents:
        asg = cache.assignments[agent.id]
        assert asg is not None, f"agent {agent.id} has no assignment"
        own_cell = state.queue.items.get(agent.item_id) if agent.item_id is not None else None
        graphs.append(agent_view(state.map, own_cell, enterable=agent.phase is Phase.SEEKING))
        starts.append(agent.pos)
        goals.append(asg.goal_cell)
    return MAPFInstance(graphs, starts, goals)


def step_episode(
    state: WorldState, cache: PlanCache, config: LifelongConfig | None = None
) -> tuple[WorldState, PlanCache, StepReport]:
    """Advance the episode by one step: re-assign, replan if needed, move."""
    if config is None:
        config = LifelongConfig()
    t = state.step
    changed = _refresh_assignments(state, cache)

    replanned = False
    failed = False
    result: CBSResult | None = None
    if changed or cache.pending_retry:
        replanned = True
        cache.replans += 1
        instance = build_instance(state, cache)
        result = cbs_solve(instance, seed=cache.solver_rng.getrandbits(63), budget=config.budget)
        if result.solved:
            assert result.paths is not None
            cache.paths = [
                Path(p.agent_id, p.vertices, start_step=t) for p in result.paths
            ]
            cache.valid_from = t
            cache.pending_retry = False
            cache.consecutive_failures = 0
        else:
            failed = True
            cache.pending_retry = True
            cache.consecutive_failures += 1
            if cache.consecutive_failures >= MAX_CONSECUTIVE_FAILURES:
                cache.degraded = True

    if failed or not cache.paths:
        moves = [Move.WAIT] * state.n_agents
    else:
        moves = []
        for agent, path in zip(state.agents, cache.paths):
            offset = t - path.start_step
            cur = path.position(offset)
            assert cur == agent.pos, (
                f"agent {agent.id} strayed from its plan: at {agent.pos}, plan says {cur}"
            )
            moves.append(move_between(cur, path.position(offset + 1)))

    _, events = apply_joint_moves(state, moves)

    for event in events:
        if isinstance(event, (PickupEvent, DeliveryEvent)):
            cache.assignments[event.agent_id] = None

    report = StepReport(
        step=t,
        replanned=replanned,
        replan_wall_secs=result.wall_secs if result else 0.0,
        expansions=result.expansions if result else 0,
        solver_status=result.status if result else None,
        replan_failed=failed,
        degraded=cache.degraded,
        events=events,
    )
    return state, cache, report


def trace_record(state: WorldState, report: StepReport | None = None) -> dict:
    """One line-delimited trace record describing the state just reached.

    With ``report`` given, the record describes the state after executing
    that step; without it, the initial state of the episode.
    """
    record = {
        "type": "step",
        "step": state.step,
        "agents": [
            {
                "id": a.id,
                "x": a.pos[0],
                "y": a.pos[1],
                "phase": a.phase.value,
                "item": a.item_id,
            }
            for a in state.agents
        ],
        "items": [[item_id, cell[0], cell[1]] for item_id, cell in sorted(state.queue.items.items())],
        "events": [warehouse.event_to_dict(e) for e in report.events] if report else [],
        "replanned": report.replanned if report else False,
        "replan_wall_secs": report.replan_wall_secs if report else 0.0,
        "expansions": report.expansions if report else 0,
        "solver_status": report.solver_status.value if report and report.solver_status else None,
        "replan_failed": report.replan_failed if report else False,
    }
    return record
