"""
Single-shot solving with conflict-based search
==============================================

Plan one agent under constraints, then solve whole teams optimally.
"""

from mapdbench import (
    MAPFInstance,
    PlanningGraph,
    VertexConstraint,
    cbs_solve,
    detect_conflicts,
    space_time_search,
)

# --- the low level: one agent in space-time -------------------------------
# A 1x3 corridor.  Unconstrained, the shortest path costs 2; blocking the
# middle cell at t=1 forces one wait.
corridor = PlanningGraph({(0, 0), (1, 0), (2, 0)})
free = space_time_search(corridor, (0, 0), (2, 0))
print("unconstrained:", free.vertices, "cost", free.cost)

blocked = space_time_search(corridor, (0, 0), (2, 0), [VertexConstraint(0, (1, 0), 1)])
print("middle blocked at t=1:", blocked.vertices, "cost", blocked.cost)

# --- the high level: a crossing ------------------------------------------
# Two agents crossing at the center of an open 3x3 grid.  The optimal sum
# of costs is 5: someone has to yield for one step.
grid = PlanningGraph({(x, y) for x in range(3) for y in range(3)})
crossing = MAPFInstance(
    graphs=[grid, grid],
    starts=[(0, 1), (1, 0)],
    goals=[(2, 1), (1, 2)],
)
result = cbs_solve(crossing, seed=0)
print(f"\ncrossing: {result.status.value}, sum of costs {result.cost}, "
      f"{result.expansions} expansions")
for path in result.paths:
    print(f"  agent {path.agent_id}: {path.vertices}")
print("residual conflicts:", detect_conflicts(list(result.paths)))

# --- infeasibility ---------------------------------------------------------
# A pure swap in the corridor has no conflict-free solution at all: the
# constraint tree bottoms out and the frontier empties.
swap = MAPFInstance(
    graphs=[corridor, corridor],
    starts=[(0, 0), (2, 0)],
    goals=[(2, 0), (0, 0)],
)
result = cbs_solve(swap, seed=0)
print(f"\npure swap: {result.status.value} after {result.expansions} expansions")
