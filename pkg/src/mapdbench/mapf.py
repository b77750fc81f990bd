"""Planning substrate: per-agent graph views, constrained space-time search,
and conflict detection between time-indexed paths.

The planner is homogeneous: every shelf cell is an obstacle for every agent
except that an agent's own requested (or carried) item opens up exactly one
shelf cell in that agent's view.  Conflicts follow the two classic
definitions - two agents on one vertex at the same step, or two agents
traversing one edge in opposite directions between consecutive steps.
Paths are compared with implicit wait-padding: an agent that has arrived
keeps occupying its final vertex.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .warehouse import Cell, Move, WarehouseMap

# Directional moves in canonical order (WAIT is handled separately).
_STEP_DELTAS = tuple(m.value for m in (Move.UP, Move.DOWN, Move.LEFT, Move.RIGHT))


@dataclass(frozen=True)
class VertexConstraint:
    """Agent ``agent_id`` may not occupy ``v`` at time ``t``."""

    agent_id: int
    v: Cell
    t: int


@dataclass(frozen=True)
class EdgeConstraint:
    """Agent ``agent_id`` may not move from ``v_from`` (at ``t``) to ``v_to`` (at ``t+1``)."""

    agent_id: int
    v_from: Cell
    v_to: Cell
    t: int


Constraint = VertexConstraint | EdgeConstraint


@dataclass(frozen=True)
class VertexConflict:
    """Agents ``agent_a`` and ``agent_b`` share vertex ``v`` at time ``t``."""

    agent_a: int
    agent_b: int
    v: Cell
    t: int


@dataclass(frozen=True)
class EdgeConflict:
    """Agents swap one edge between ``t`` and ``t+1``; ``v_from``/``v_to`` is
    agent_a's direction of travel."""

    agent_a: int
    agent_b: int
    v_from: Cell
    v_to: Cell
    t: int


Conflict = VertexConflict | EdgeConflict


@dataclass(frozen=True)
class Path:
    """Time-indexed vertex sequence; the agent stays on the last vertex after
    arrival (implicit wait-padding)."""

    agent_id: int
    vertices: tuple[Cell, ...]
    start_step: int = 0

    @property
    def cost(self) -> int:
        return len(self.vertices) - 1

    def position(self, offset: int) -> Cell:
        """Vertex at ``offset`` steps past ``start_step``, clamped to the end."""
        if offset < 0:
            raise IndexError(f"negative path offset {offset}")
        return self.vertices[min(offset, len(self.vertices) - 1)]

    def at_step(self, step: int) -> Cell:
        return self.position(step - self.start_step)


class PlanningGraph:
    """4-connected graph over an explicit set of passable cells, with cached
    true-shortest-distance tables per goal (the search heuristic).

    Cells in ``no_entry`` belong to the graph but cannot be moved into:
    an agent may start there, wait there, and leave, but never return.
    Incoming edges of such cells are dropped, so the graph is directed and
    distance tables are built over reversed edges.
    """

    def __init__(self, cells: Iterable[Cell], no_entry: Iterable[Cell] = ()):
        self.cells = frozenset(cells)
        self.no_entry = frozenset(no_entry) & self.cells
        self.adjacency: dict[Cell, tuple[Cell, ...]] = {}
        for cell in self.cells:
            x, y = cell
            self.adjacency[cell] = tuple(
                (x + dx, y + dy)
                for dx, dy in _STEP_DELTAS
                if (x + dx, y + dy) in self.cells and (x + dx, y + dy) not in self.no_entry
            )
        self._reverse: dict[Cell, tuple[Cell, ...]] | None = None
        self._dist_tables: dict[Cell, dict[Cell, int]] = {}

    def __contains__(self, cell: Cell) -> bool:
        return cell in self.cells

    def __len__(self) -> int:
        return len(self.cells)

    def neighbors(self, cell: Cell) -> tuple[Cell, ...]:
        return self.adjacency[cell]

    def _reverse_adjacency(self) -> dict[Cell, tuple[Cell, ...]]:
        if not self.no_entry:
            return self.adjacency
        if self._reverse is None:
            rev: dict[Cell, list[Cell]] = {cell: [] for cell in self.cells}
            for src, nbrs in self.adjacency.items():
                for dst in nbrs:
                    rev[dst].append(src)
            self._reverse = {cell: tuple(srcs) for cell, srcs in rev.items()}
        return self._reverse

    def distances_to(self, goal: Cell) -> dict[Cell, int]:
        """True shortest distances from every cell that can reach ``goal``."""
        table = self._dist_tables.get(goal)
        if table is None:
            if goal not in self.cells:
                raise ValueError(f"goal {goal} not in graph")
            reverse = self._reverse_adjacency()
            table = {goal: 0}
            frontier = deque([goal])
            while frontier:
                cur = frontier.popleft()
                d = table[cur] + 1
                for nxt in reverse[cur]:
                    if nxt not in table:
                        table[nxt] = d
                        frontier.append(nxt)
            self._dist_tables[goal] = table
        return table


def agent_view(
    grid: WarehouseMap, own_item_cell: Cell | None = None, enterable: bool = True
) -> PlanningGraph:
    """Planning view of the warehouse for one agent.

    Corridor and delivery cells are passable; shelf cells are obstacles
    except the agent's own item cell.  For a seeking agent that cell is the
    pickup target and fully passable; for a carrying agent it is only the
    spot it is standing on right after the pickup, so it is start-only
    (``enterable=False``) - loaded agents may not move back under a shelf.
    Views are cached on the map, keyed by the opened-up cell and mode.
    """
    if own_item_cell is not None and not grid.is_shelf(own_item_cell):
        own_item_cell = None
    key = (own_item_cell, enterable if own_item_cell is not None else True)
    cached = grid._view_cache.get(key)
    if cached is None:
        cells = set(grid.corridor_cells) | set(grid.delivery_cells)
        no_entry = ()
        if own_item_cell is not None:
            cells.add(own_item_cell)
            if not key[1]:
                no_entry = (own_item_cell,)
        cached = PlanningGraph(cells, no_entry=no_entry)
        grid._view_cache[key] = cached
    return cached


class ReservationIndex:
    """Occupancy index over a set of paths, used to break ties in the
    low-level search toward paths that collide least with teammates
    (the cooperative-search idea: plan around everyone else's reservations).

    Arrived agents park on their final vertex forever, so tails are
    open-ended.
    """

    def __init__(self, paths: Iterable[Path]):
        self.moving: set[tuple[Cell, int]] = set()
        self.edges: set[tuple[Cell, Cell, int]] = set()
        self.parked: dict[Cell, int] = {}
        for path in paths:
            vertices = path.vertices
            last = len(vertices) - 1
            for t, cell in enumerate(vertices):
                if t < last:
                    self.moving.add((cell, t))
                if t:
                    prev = vertices[t - 1]
                    if prev != cell:
                        self.edges.add((prev, cell, t - 1))
            tail = vertices[last]
            existing = self.parked.get(tail)
            if existing is None or last < existing:
                self.parked[tail] = last

    def collides(self, src: Cell, dst: Cell, t: int) -> bool:
        """True if moving src->dst between t and t+1 hits any reservation."""
        nt = t + 1
        if (dst, nt) in self.moving:
            return True
        since = self.parked.get(dst)
        if since is not None and nt >= since:
            return True
        if src != dst and (dst, src, t) in self.edges:
            return True
        return False


def space_time_search(
    graph: PlanningGraph,
    start: Cell,
    goal: Cell,
    constraints: Iterable[Constraint] = (),
    horizon: int = 10_000,
    agent_id: int = 0,
    avoid: ReservationIndex | None = None,
) -> Path | None:
    """Minimum-cost path from ``start`` to ``goal`` violating no constraint,
    or None if no such path arrives within ``horizon`` steps.

    The agent is deemed to stay at the goal forever after arrival, so a
    vertex constraint on the goal at time t forces any arrival to happen
    strictly after t.  Ties on f are broken toward fewer collisions with
    ``avoid`` (when given), then larger g, then the order successors are
    generated (wait, up, down, left, right); the result is cost-minimal
    either way.
    """
    if start not in graph:
        raise ValueError(f"start {start} not in graph")
    if goal not in graph:
        raise ValueError(f"goal {goal} not in graph")

    blocked_vertex: set[tuple[Cell, int]] = set()
    blocked_edge: set[tuple[Cell, Cell, int]] = set()
    goal_frozen_until = -1
    for c in constraints:
        if isinstance(c, VertexConstraint):
            blocked_vertex.add((c.v, c.t))
            if c.v == goal and c.t > goal_frozen_until:
                goal_frozen_until = c.t
        else:
            blocked_edge.add((c.v_from, c.v_to, c.t))

    if (start, 0) in blocked_vertex:
        return None
    dist = graph.distances_to(goal)
    if start not in dist or dist[start] > horizon:
        return None

    if not blocked_vertex and not blocked_edge and avoid is None:
        return _unconstrained_path(graph, start, goal, dist, agent_id)

    # A* over (cell, time); g equals time and h is consistent, so the first
    # pop of a (cell, time) pair carries the lexicographically best
    # (cost, collisions) reachable for it along greedy tie-breaking.
    counter = 0
    open_heap = [(dist[start], 0, 0, counter, start, 0, None)]
    parents: dict[tuple[Cell, int], tuple[Cell, int] | None] = {}
    visited: set[tuple[Cell, int]] = set()
    while open_heap:
        f, coll, neg_g, _, cell, t, parent = heapq.heappop(open_heap)
        state = (cell, t)
        if state in visited:
            continue
        visited.add(state)
        parents[state] = parent
        if cell == goal and t > goal_frozen_until:
            vertices = [cell]
            node = parents[state]
            while node is not None:
                vertices.append(node[0])
                node = parents[node]
            vertices.reverse()
            return Path(agent_id, tuple(vertices))
        if t >= horizon:
            continue
        nt = t + 1
        if (cell, nt) not in visited and (cell, nt) not in blocked_vertex:
            extra = 1 if avoid is not None and avoid.collides(cell, cell, t) else 0
            counter += 1
            heapq.heappush(open_heap, (nt + dist[cell], coll + extra, -nt, counter, cell, nt, state))
        for nxt in graph.adjacency[cell]:
            if (nxt, nt) in visited or (nxt, nt) in blocked_vertex:
                continue
            if (cell, nxt, t) in blocked_edge:
                continue
            h = dist.get(nxt)
            if h is None:
                continue
            extra = 1 if avoid is not None and avoid.collides(cell, nxt, t) else 0
            counter += 1
            heapq.heappush(open_heap, (nt + h, coll + extra, -nt, counter, nxt, nt, state))
    return None


def _unconstrained_path(
    graph: PlanningGraph, start: Cell, goal: Cell, dist: dict[Cell, int], agent_id: int
) -> Path:
    # Greedy descent of the distance table; first neighbor in canonical
    # order wins, matching the A* tie-breaking for the constraint-free case.
    vertices = [start]
    cur = start
    while cur != goal:
        d = dist[cur]
        for nxt in graph.adjacency[cur]:
            if dist.get(nxt) == d - 1:
                cur = nxt
                break
        vertices.append(cur)
    return Path(agent_id, tuple(vertices))


def pair_conflicts(pa: Path, pb: Path, horizon: int | None = None) -> list[Conflict]:
    """Conflicts between two paths under wait-padding, in time order.

    ``horizon`` is the padded comparison length; it defaults to the longer
    of the two paths, which only drops conflicts relative to a longer
    global padding when both paths park on one final cell forever.
    """
    if pa.agent_id > pb.agent_id:
        pa, pb = pb, pa
    va, vb = pa.vertices, pb.vertices
    la, lb = len(va), len(vb)
    if horizon is None:
        horizon = max(la, lb)
    out: list[Conflict] = []
    a_prev, b_prev = va[0], vb[0]
    if a_prev == b_prev:
        out.append(VertexConflict(pa.agent_id, pb.agent_id, a_prev, 0))
    for t in range(1, horizon):
        a_cur = va[t] if t < la else va[-1]
        b_cur = vb[t] if t < lb else vb[-1]
        if a_cur == b_cur:
            out.append(VertexConflict(pa.agent_id, pb.agent_id, a_cur, t))
        elif a_cur == b_prev and b_cur == a_prev:
            out.append(EdgeConflict(pa.agent_id, pb.agent_id, a_prev, a_cur, t - 1))
        a_prev, b_prev = a_cur, b_cur
    return out


def detect_conflicts(paths: list[Path]) -> list[Conflict]:
    """All vertex and edge conflicts between pairs of paths, in canonical
    order (time, lower agent id, vertex before edge).

    Shorter paths are wait-padded on their final vertex, so an arrived
    agent still blocks its goal cell.  Times are offsets from the shared
    start step.
    """
    if len(paths) > 1 and len({p.start_step for p in paths}) != 1:
        raise ValueError("paths must share one start step")
    ordered = sorted(paths, key=lambda p: p.agent_id)
    horizon = max((len(p.vertices) for p in paths), default=0)
    conflicts: list[Conflict] = []
    for i, pa in enumerate(ordered):
        for pb in ordered[i + 1 :]:
            conflicts.extend(pair_conflicts(pa, pb, horizon))
    conflicts.sort(key=_conflict_sort_key)
    return conflicts


def _conflict_sort_key(c: Conflict) -> tuple:
    if isinstance(c, VertexConflict):
        return (c.t, c.agent_a, 0, c.agent_b, c.v, c.v)
    return (c.t, c.agent_a, 1, c.agent_b, c.v_from, c.v_to)


def split_conflict(conflict: Conflict) -> tuple[Constraint, Constraint]:
    """The two child constraints that resolve a conflict, one per agent."""
    if isinstance(conflict, VertexConflict):
        return (
            VertexConstraint(conflict.agent_a, conflict.v, conflict.t),
            VertexConstraint(conflict.agent_b, conflict.v, conflict.t),
        )
    return (
        EdgeConstraint(conflict.agent_a, conflict.v_from, conflict.v_to, conflict.t),
        EdgeConstraint(conflict.agent_b, conflict.v_to, conflict.v_from, conflict.t),
    )
