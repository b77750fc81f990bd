"""Single-shot optimal multi-agent pathfinding via conflict-based search.

Best-first search over a binary constraint tree.  Each node carries a
constraint set, one individually cost-minimal path per agent under those
constraints, the sum of path costs, and the list of remaining conflicts.
Expanding a node picks one conflict at random (seeded), splits it into one
extra constraint per involved agent, and replans only the newly
constrained agent in each child; a child whose replan is infeasible is
pruned.  The first conflict-free node popped is a sum-of-costs optimum.
"""

from __future__ import annotations

import heapq
import random
import time
from dataclasses import dataclass
from enum import Enum

from .mapf import (
    Conflict,
    Constraint,
    Path,
    PlanningGraph,
    ReservationIndex,
    _conflict_sort_key,
    detect_conflicts,
    pair_conflicts,
    space_time_search,
    split_conflict,
)
from .warehouse import Cell


class SolveStatus(Enum):
    SOLVED = "solved"
    EXHAUSTED = "exhausted"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class SolverBudget:
    max_expansions: int = 50_000
    wall_time_limit: float = 30.0


@dataclass
class MAPFInstance:
    """Per-agent graph views plus pairwise-distinct starts and goals."""

    graphs: list[PlanningGraph]
    starts: list[Cell]
    goals: list[Cell]

    def __post_init__(self) -> None:
        n = len(self.graphs)
        if n == 0:
            raise ValueError("instance has no agents")
        if len(self.starts) != n or len(self.goals) != n:
            raise ValueError("graphs, starts and goals must have equal length")
        if len(set(self.starts)) != n:
            raise ValueError(f"starts are not pairwise distinct: {self.starts}")
        if len(set(self.goals)) != n:
            raise ValueError(f"goals are not pairwise distinct: {self.goals}")
        for i, (g, s, t) in enumerate(zip(self.graphs, self.starts, self.goals)):
            if s not in g:
                raise ValueError(f"start {s} of agent {i} not in its graph view")
            if t not in g:
                raise ValueError(f"goal {t} of agent {i} not in its graph view")

    @property
    def n_agents(self) -> int:
        return len(self.graphs)

    @property
    def horizon(self) -> int:
        """Arrival-time bound for every low-level search of one solve.

        Fixed per instance (graph area + 1, there being no constraints
        before the search starts), which keeps the constraint space finite:
        on instances with no conflict-free solution the tree bottoms out
        and the frontier empties instead of growing forever.
        """
        return max(len(g) for g in self.graphs) + 1


@dataclass
class CTNode:
    """One constraint-tree node: constraints, solution, cost, conflicts."""

    constraints: frozenset[Constraint]
    solution: tuple[Path, ...]
    cost: int
    conflicts: tuple[Conflict, ...]


@dataclass
class CBSResult:
    status: SolveStatus
    paths: tuple[Path, ...] | None = None
    cost: int | None = None
    expansions: int = 0
    wall_secs: float = 0.0

    @property
    def solved(self) -> bool:
        return self.status is SolveStatus.SOLVED


def _plan_agent(instance: MAPFInstance, agent_id: int, constraints: frozenset[Constraint]) -> Path | None:
    own = [c for c in constraints if c.agent_id == agent_id]
    return space_time_search(
        instance.graphs[agent_id],
        instance.starts[agent_id],
        instance.goals[agent_id],
        own,
        horizon=instance.horizon,
        agent_id=agent_id,
    )


def make_root(instance: MAPFInstance) -> CTNode | None:
    """Root node with an empty constraint set; None if some agent has no
    path at all (the instance is then infeasible)."""
    paths = []
    for i in range(instance.n_agents):
        path = _plan_agent(instance, i, frozenset())
        if path is None:
            return None
        paths.append(path)
    solution = tuple(paths)
    return CTNode(
        constraints=frozenset(),
        solution=solution,
        cost=sum(p.cost for p in solution),
        conflicts=tuple(detect_conflicts(list(solution))),
    )


def _updated_conflicts(node: CTNode, solution: tuple[Path, ...], agent_id: int) -> tuple[Conflict, ...]:
    # Only the replanned agent's pairs can have changed.  Pair-local padding
    # is exact here because goals (hence parked cells) are pairwise distinct.
    new_path = next(p for p in solution if p.agent_id == agent_id)
    kept = [c for c in node.conflicts if agent_id not in (c.agent_a, c.agent_b)]
    for other in solution:
        if other.agent_id != agent_id:
            kept.extend(pair_conflicts(new_path, other))
    kept.sort(key=_conflict_sort_key)
    return tuple(kept)


def expand_node(node: CTNode, conflict: Conflict, instance: MAPFInstance) -> list[CTNode]:
    """Split ``conflict`` into two children, replanning only the newly
    constrained agent in each; infeasible children are dropped."""
    if conflict not in node.conflicts:
        raise ValueError(f"conflict {conflict} is not one of the node's conflicts")
    children = []
    for constraint in split_conflict(conflict):
        constraints = node.constraints | {constraint}
        agent_id = constraint.agent_id
        path = _plan_agent(instance, agent_id, constraints)
        if path is None:
            continue
        solution = tuple(
            path if p.agent_id == agent_id else p for p in node.solution
        )
        children.append(
            CTNode(
                constraints=constraints,
                solution=solution,
                cost=sum(p.cost for p in solution),
                conflicts=_updated_conflicts(node, solution, agent_id),
            )
        )
    return children


def cbs_solve(instance: MAPFInstance, seed: int = 0, budget: SolverBudget = SolverBudget()) -> CBSResult:
    """Optimal sum-of-costs solve, or EXHAUSTED when the budget runs out,
    or INFEASIBLE when the constraint-tree frontier empties.

    The frontier pops the cheapest node, breaking ties toward fewer
    conflicts and then insertion order; the conflict to split on is chosen
    uniformly at random from the node's conflict list via ``seed``.
    """
    t0 = time.perf_counter()
    rng = random.Random(seed)
    root = make_root(instance)
    if root is None:
        return CBSResult(SolveStatus.INFEASIBLE, wall_secs=time.perf_counter() - t0)

    counter = 0
    frontier: list[tuple[int, int, int, CTNode]] = [(root.cost, len(root.conflicts), counter, root)]
    expansions = 0
    while frontier:
        _, _, _, node = heapq.heappop(frontier)
        if not node.conflicts:
            return CBSResult(
                SolveStatus.SOLVED,
                paths=node.solution,
                cost=node.cost,
                expansions=expansions,
                wall_secs=time.perf_counter() - t0,
            )
        if expansions >= budget.max_expansions or time.perf_counter() - t0 > budget.wall_time_limit:
            return CBSResult(
                SolveStatus.EXHAUSTED,
                expansions=expansions,
                wall_secs=time.perf_counter() - t0,
            )
        expansions += 1
        conflict = node.conflicts[rng.randrange(len(node.conflicts))]
        for child in expand_node(node, conflict, instance):
            counter += 1
            heapq.heappush(frontier, (child.cost, len(child.conflicts), counter, child))
    return CBSResult(
        SolveStatus.INFEASIBLE,
        expansions=expansions,
        wall_secs=time.perf_counter() - t0,
    )
