"""Independent brute-force oracles used to check the planners.

Everything here works from plain cell sets with its own adjacency code and
deliberately avoids the search implementations under test: the joint-state
optimum is a Dijkstra over the product space, the constrained single-agent
optimum a layered breadth-first sweep over (cell, time), and the conflict
scan a direct occupancy comparison on explicitly padded paths.
"""

from __future__ import annotations

import heapq
from itertools import combinations

from mapdbench.mapf import EdgeConstraint, VertexConstraint

Cell = tuple[int, int]


def _adjacent(cell: Cell, cells: frozenset[Cell] | set[Cell]) -> list[Cell]:
    x, y = cell
    return [c for c in ((x, y - 1), (x, y + 1), (x - 1, y), (x + 1, y)) if c in cells]


def joint_optimal_sum_of_costs(
    cell_sets: list[set[Cell]],
    starts: list[Cell],
    goals: list[Cell],
) -> int | None:
    """Exact optimal sum of costs over the joint state space, or None if the
    instance has no conflict-free solution.

    States are (positions, done flags); a done agent sits on its goal
    forever at zero further cost, a live agent pays one unit per step.  An
    agent may declare itself done whenever it stands on its goal.  Vertex
    collisions and edge swaps between any two agents are forbidden.
    """
    n = len(starts)
    moves_from: list[dict[Cell, list[Cell]]] = []
    for cells in cell_sets:
        table = {cell: [cell] + _adjacent(cell, cells) for cell in cells}
        moves_from.append(table)

    def initial_states():
        at_goal = [i for i in range(n) if starts[i] == goals[i]]
        for k in range(len(at_goal) + 1):
            for subset in combinations(at_goal, k):
                done = tuple(i in subset for i in range(n))
                yield (tuple(starts), done)

    best: dict[tuple, int] = {}
    heap: list[tuple[int, tuple]] = []
    for state in initial_states():
        best[state] = 0
        heapq.heappush(heap, (0, state))

    while heap:
        g, (positions, done) = heapq.heappop(heap)
        state = (positions, done)
        if g > best.get(state, float("inf")):
            continue
        if all(done):
            return g
        live = [i for i in range(n) if not done[i]]
        step_cost = len(live)

        # Enumerate joint moves of live agents with incremental conflict checks.
        def extend(idx: int, chosen: list[Cell]):
            if idx == len(live):
                yield tuple(chosen)
                return
            agent = live[idx]
            for target in moves_from[agent][positions[agent]]:
                ok = True
                for j in range(n):
                    if done[j]:
                        if target == positions[j]:
                            ok = False
                            break
                    elif j in live[:idx]:
                        other_new = chosen[live.index(j)]
                        if target == other_new:
                            ok = False
                            break
                        if target == positions[j] and other_new == positions[agent]:
                            ok = False
                            break
                if ok:
                    yield from extend(idx + 1, chosen + [target])

        for live_targets in extend(0, []):
            new_positions = list(positions)
            for idx, agent in enumerate(live):
                new_positions[agent] = live_targets[idx]
            arrived = [i for i in live if new_positions[i] == goals[i]]
            for k in range(len(arrived) + 1):
                for subset in combinations(arrived, k):
                    new_done = tuple(done[i] or i in subset for i in range(n))
                    new_state = (tuple(new_positions), new_done)
                    new_g = g + step_cost
                    if new_g < best.get(new_state, float("inf")):
                        best[new_state] = new_g
                        heapq.heappush(heap, (new_g, new_state))
    return None


def layered_constrained_cost(
    cells: set[Cell],
    start: Cell,
    goal: Cell,
    constraints,
    horizon: int,
) -> int | None:
    """Optimal single-agent arrival time under constraints, by sweeping the
    full reachable set one time layer at a time; None if nothing arrives
    within the horizon.  Arrival at time t requires no vertex constraint on
    the goal at any t' >= t (the agent parks on the goal forever).
    """
    blocked_vertex = set()
    blocked_edge = set()
    goal_frozen = -1
    for c in constraints:
        if isinstance(c, VertexConstraint):
            blocked_vertex.add((c.v, c.t))
            if c.v == goal:
                goal_frozen = max(goal_frozen, c.t)
        elif isinstance(c, EdgeConstraint):
            blocked_edge.add((c.v_from, c.v_to, c.t))
        else:
            raise TypeError(f"unknown constraint {c!r}")
    if start not in cells or goal not in cells:
        raise ValueError("start or goal outside the graph")
    if (start, 0) in blocked_vertex:
        return None
    layer = {start}
    for t in range(horizon + 1):
        if goal in layer and t > goal_frozen:
            return t
        if t == horizon:
            break
        nxt_layer = set()
        for cur in layer:
            for nxt in [cur] + _adjacent(cur, cells):
                if (nxt, t + 1) in blocked_vertex:
                    continue
                if nxt != cur and (cur, nxt, t) in blocked_edge:
                    continue
                nxt_layer.add(nxt)
        layer = nxt_layer
        if not layer:
            return None
    return None


def naive_conflict_set(paths) -> set[tuple]:
    """All pairwise conflicts as comparable tuples, from explicitly padded
    copies of the paths."""
    if not paths:
        return set()
    length = max(len(p.vertices) for p in paths)
    padded = {
        p.agent_id: list(p.vertices) + [p.vertices[-1]] * (length - len(p.vertices))
        for p in paths
    }
    found: set[tuple] = set()
    ids = sorted(padded)
    for a, b in combinations(ids, 2):
        pa, pb = padded[a], padded[b]
        for t in range(length):
            if pa[t] == pb[t]:
                found.add(("v", a, b, pa[t], t))
            if t + 1 < length and pa[t] == pb[t + 1] and pb[t] == pa[t + 1] and pa[t] != pb[t]:
                found.add(("e", a, b, pa[t], pa[t + 1], t))
    return found


def random_connected_cells(rng, width: int, height: int, obstacles: int) -> set[Cell]:
    """A connected random cell set: start from the full grid and knock out
    up to ``obstacles`` cells, keeping 4-connectivity."""
    cells = {(x, y) for x in range(width) for y in range(height)}
    candidates = sorted(cells)
    rng.shuffle(candidates)
    removed = 0
    for cell in candidates:
        if removed >= obstacles or len(cells) <= 2:
            break
        trial = cells - {cell}
        if _is_connected(trial):
            cells = trial
            removed += 1
    return cells


def _is_connected(cells: set[Cell]) -> bool:
    if not cells:
        return False
    seed = next(iter(cells))
    seen = {seed}
    stack = [seed]
    while stack:
        cur = stack.pop()
        for nxt in _adjacent(cur, cells):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == len(cells)
