"""Deterministic, seedable grid-warehouse simulator.

The warehouse is a rectangular grid of corridor, shelf and delivery cells.
The whole bottom row is the delivery row.  Agents seek a requested item on
a shelf cell, pick it up by stepping onto that cell, carry it to any
delivery cell, and are then free for the next request.  The request queue
always holds exactly as many items as there are agents: each delivery
removes the carried item and spawns a fresh one on a random free shelf.

Movement is 4-connected plus waiting.  An agent that carries an item may
only enter corridor or delivery cells; an empty-handed agent may cross
shelf cells too.  The simulator never resolves collisions itself - the
caller must hand in a joint move that is free of vertex collisions and
swaps, and any violation raises a contract error naming the offenders.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from enum import Enum
from importlib import resources

Cell = tuple[int, int]  # (x, y); y grows downward, bottom row = delivery row

CORRIDOR = "."
SHELF = "S"
DELIVERY = "D"
_CELL_CHARS = frozenset((CORRIDOR, SHELF, DELIVERY))

FIXTURE_NAMES = ("small", "medium", "large")

PICKUP_REWARD = 1
DELIVERY_REWARD = 2


class MapFormatError(ValueError):
    """A map text is malformed or violates a layout rule."""


class MoveContractError(RuntimeError):
    """Base class for joint-move contract violations."""


class IllegalMoveError(MoveContractError):
    pass


class VertexCollisionError(MoveContractError):
    pass


class EdgeSwapError(MoveContractError):
    pass


class Move(Enum):
    # Definition order is the canonical tie-breaking order everywhere.
    WAIT = (0, 0)
    UP = (0, -1)
    DOWN = (0, 1)
    LEFT = (-1, 0)
    RIGHT = (1, 0)

    @property
    def delta(self) -> Cell:
        return self.value

    def target(self, pos: Cell) -> Cell:
        dx, dy = self.value
        return (pos[0] + dx, pos[1] + dy)


_DELTA_TO_MOVE = {m.value: m for m in Move}


def move_between(src: Cell, dst: Cell) -> Move:
    """Move that takes ``src`` to ``dst`` (must be identical or 4-adjacent)."""
    delta = (dst[0] - src[0], dst[1] - src[1])
    try:
        return _DELTA_TO_MOVE[delta]
    except KeyError:
        raise ValueError(f"cells {src} and {dst} are not adjacent") from None


class Phase(Enum):
    SEEKING = "seeking"
    CARRYING = "carrying"


class WarehouseMap:
    """Static warehouse layout: corridors, shelves, and the delivery row."""

    def __init__(self, rows: list[str] | tuple[str, ...], name: str = "custom"):
        self.rows: tuple[str, ...] = tuple(rows)
        self.name = name
        if not self.rows or not self.rows[0]:
            raise MapFormatError("map has no cells")
        self.width = len(self.rows[0])
        self.height = len(self.rows)
        self._validate()
        self.corridor_cells = frozenset(
            (x, y) for y, row in enumerate(self.rows) for x, ch in enumerate(row) if ch == CORRIDOR
        )
        self.shelf_cells = frozenset(
            (x, y) for y, row in enumerate(self.rows) for x, ch in enumerate(row) if ch == SHELF
        )
        self.delivery_cells = frozenset(
            (x, y) for y, row in enumerate(self.rows) for x, ch in enumerate(row) if ch == DELIVERY
        )
        # Planning-graph views keyed by the one shelf cell opened up for the
        # owning agent (or None).  Populated lazily by mapf.agent_view.
        self._view_cache: dict = {}

    def _validate(self) -> None:
        for y, row in enumerate(self.rows):
            if len(row) != self.width:
                raise MapFormatError(f"ragged rows: row {y} has length {len(row)}, expected {self.width}")
            for x, ch in enumerate(row):
                if ch not in _CELL_CHARS:
                    raise MapFormatError(f"illegal character {ch!r} at ({x}, {y})")
        bottom = self.height - 1
        for x, ch in enumerate(self.rows[bottom]):
            if ch != DELIVERY:
                raise MapFormatError(f"bottom row cell ({x}, {bottom}) is not a delivery cell")
        for y, row in enumerate(self.rows[:bottom]):
            for x, ch in enumerate(row):
                if ch == DELIVERY:
                    raise MapFormatError(f"delivery cell ({x}, {y}) off the bottom row")
        self._check_connected()
        self._check_shelf_access()

    def _check_connected(self) -> None:
        # Corridor graph = corridor + delivery cells, 4-connected.
        open_cells = {
            (x, y)
            for y, row in enumerate(self.rows)
            for x, ch in enumerate(row)
            if ch != SHELF
        }
        if not open_cells:
            raise MapFormatError("map has no corridor or delivery cells")
        seed = next(iter(open_cells))
        seen = {seed}
        frontier = deque([seed])
        while frontier:
            x, y = frontier.popleft()
            for nxt in ((x, y - 1), (x, y + 1), (x - 1, y), (x + 1, y)):
                if nxt in open_cells and nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        if seen != open_cells:
            missing = sorted(open_cells - seen)[0]
            raise MapFormatError(f"disconnected corridor graph: cell {missing} unreachable")

    def _check_shelf_access(self) -> None:
        for y, row in enumerate(self.rows):
            for x, ch in enumerate(row):
                if ch != SHELF:
                    continue
                around = ((x, y - 1), (x, y + 1), (x - 1, y), (x + 1, y))
                if not any(self.in_bounds(c) and self.kind(c) == CORRIDOR for c in around):
                    raise MapFormatError(f"shelf cell ({x}, {y}) has no adjacent corridor cell")

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def kind(self, cell: Cell) -> str:
        return self.rows[cell[1]][cell[0]]

    def is_shelf(self, cell: Cell) -> bool:
        return self.kind(cell) == SHELF

    def is_delivery(self, cell: Cell) -> bool:
        return self.kind(cell) == DELIVERY

    def passable_carrying(self, cell: Cell) -> bool:
        return self.kind(cell) != SHELF

    def serialize(self) -> str:
        return "\n".join(self.rows) + "\n"

    def __eq__(self, other) -> bool:
        return isinstance(other, WarehouseMap) and self.rows == other.rows

    def __hash__(self) -> int:
        return hash(self.rows)

    def __repr__(self) -> str:
        return f"WarehouseMap({self.name!r}, {self.width}x{self.height})"


def load_map(text: str, name: str = "custom") -> WarehouseMap:
    """Parse map text: optional leading '#' comment lines, then grid rows."""
    lines = text.splitlines()
    while lines and lines[0].startswith("#"):
        lines.pop(0)
    return WarehouseMap(lines, name=name)


def load_fixture(name: str) -> WarehouseMap:
    """Load one of the shipped layouts: small, medium, or large."""
    if name not in FIXTURE_NAMES:
        raise ValueError(f"unknown fixture {name!r}; expected one of {FIXTURE_NAMES}")
    text = resources.files("mapdbench.maps").joinpath(f"{name}.map").read_text(encoding="utf-8")
    return load_map(text, name=name)


@dataclass
class AgentState:
    id: int
    pos: Cell
    phase: Phase = Phase.SEEKING
    item_id: int | None = None  # assigned item while seeking, carried item while carrying
    first_delivery_step: int | None = None
    pickups: int = 0
    deliveries: int = 0
    cumulative_reward: int = 0


class RequestQueue:
    """Currently requested items, keyed by item id, each on a shelf cell.

    An item stays in the queue from the moment it is requested until it is
    delivered, so the queue size is constant.  While an item is being
    carried its recorded cell is the shelf it was picked from.
    """

    def __init__(self, items: dict[int, Cell], capacity: int):
        self.items = dict(items)
        self.capacity = capacity

    def locations(self) -> set[Cell]:
        return set(self.items.values())

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, item_id: int) -> bool:
        return item_id in self.items


@dataclass(frozen=True)
class PickupEvent:
    agent_id: int
    item_id: int
    cell: Cell
    step: int


@dataclass(frozen=True)
class DeliveryEvent:
    agent_id: int
    item_id: int
    cell: Cell
    step: int


@dataclass(frozen=True)
class SpawnEvent:
    item_id: int
    cell: Cell
    step: int


Event = PickupEvent | DeliveryEvent | SpawnEvent


class WorldState:
    """Dynamic episode state: agents, request queue, step counter, RNG."""

    def __init__(
        self,
        grid: WarehouseMap,
        agents: list[AgentState],
        queue: RequestQueue,
        rng: random.Random,
        step: int = 0,
        next_item_id: int | None = None,
    ):
        self.map = grid
        self.agents = agents
        self.queue = queue
        self.rng = rng
        self.step = step
        self.next_item_id = len(queue.items) if next_item_id is None else next_item_id

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    def snapshot(self) -> tuple:
        """Full comparable signature of the state, RNG included."""
        return (
            self.map.rows,
            tuple(
                (a.id, a.pos, a.phase, a.item_id, a.first_delivery_step, a.pickups, a.deliveries, a.cumulative_reward)
                for a in self.agents
            ),
            tuple(sorted(self.queue.items.items())),
            self.step,
            self.next_item_id,
            self.rng.getstate(),
        )

    def __eq__(self, other) -> bool:
        return isinstance(other, WorldState) and self.snapshot() == other.snapshot()


def init_episode(grid: WarehouseMap, n_agents: int, seed: int) -> WorldState:
    """Seeded episode start: agents on distinct corridor cells, one requested
    item per agent on distinct shelf cells, all counters zero."""
    if n_agents < 1:
        raise ValueError("need at least one agent")
    corridors = sorted(grid.corridor_cells)
    shelves = sorted(grid.shelf_cells)
    if len(corridors) < n_agents:
        raise ValueError(f"map has {len(corridors)} corridor cells, need {n_agents}")
    if len(shelves) < n_agents:
        raise ValueError(f"map has {len(shelves)} shelf cells, need {n_agents}")
    if len(grid.delivery_cells) < n_agents:
        raise ValueError(f"map has {len(grid.delivery_cells)} delivery cells, need {n_agents}")
    rng = random.Random(seed)
    starts = rng.sample(corridors, n_agents)
    item_cells = rng.sample(shelves, n_agents)
    agents = [AgentState(id=i, pos=starts[i]) for i in range(n_agents)]
    queue = RequestQueue({i: item_cells[i] for i in range(n_agents)}, capacity=n_agents)
    return WorldState(grid, agents, queue, rng)


def legal_moves(state: WorldState, agent_id: int) -> set[Move]:
    """Moves whose target cell is passable for the agent's phase.

    Occupancy by other agents is deliberately not checked: collision
    avoidance is the planner's job, not the movement rule's.
    """
    if not 0 <= agent_id < len(state.agents):
        raise IndexError(f"invalid agent id {agent_id}")
    agent = state.agents[agent_id]
    grid = state.map
    moves = {Move.WAIT}
    for move in (Move.UP, Move.DOWN, Move.LEFT, Move.RIGHT):
        cell = move.target(agent.pos)
        if not grid.in_bounds(cell):
            continue
        if agent.phase is Phase.CARRYING and not grid.passable_carrying(cell):
            continue
        moves.add(move)
    return moves


def apply_joint_moves(state: WorldState, moves: list[Move]) -> tuple[WorldState, list[Event]]:
    """Apply one simultaneous move per agent and fire pickup/delivery events.

    The caller guarantees a conflict-free joint move; an illegal move, a
    vertex collision, or an edge swap raises a contract error naming the
    offending agents and cells.  Each delivery removes the carried item
    from the queue and spawns a new request on a uniformly random shelf
    cell that hosts no item and no agent.
    """
    if len(moves) != len(state.agents):
        raise ValueError(f"got {len(moves)} moves for {len(state.agents)} agents")
    grid = state.map

    targets: list[Cell] = []
    for agent, move in zip(state.agents, moves):
        if move not in legal_moves(state, agent.id):
            raise IllegalMoveError(
                f"agent {agent.id} ({agent.phase.value}) cannot move {move.name} from {agent.pos}"
            )
        targets.append(move.target(agent.pos))

    seen: dict[Cell, int] = {}
    for agent, tgt in zip(state.agents, targets):
        if tgt in seen:
            raise VertexCollisionError(f"agents {seen[tgt]} and {agent.id} both end on {tgt}")
        seen[tgt] = agent.id
    for i, a in enumerate(state.agents):
        for j in range(i + 1, len(state.agents)):
            b = state.agents[j]
            if a.pos != b.pos and targets[i] == b.pos and targets[j] == a.pos:
                raise EdgeSwapError(f"agents {a.id} and {b.id} swap across {a.pos}<->{b.pos}")

    for agent, tgt in zip(state.agents, targets):
        agent.pos = tgt
    state.step += 1
    now = state.step

    events: list[Event] = []
    for agent in state.agents:
        if (
            agent.phase is Phase.SEEKING
            and agent.item_id is not None
            and state.queue.items.get(agent.item_id) == agent.pos
        ):
            agent.phase = Phase.CARRYING
            agent.pickups += 1
            agent.cumulative_reward += PICKUP_REWARD
            events.append(PickupEvent(agent.id, agent.item_id, agent.pos, now))
        elif agent.phase is Phase.CARRYING and grid.is_delivery(agent.pos):
            item_id = agent.item_id
            assert item_id is not None
            del state.queue.items[item_id]
            agent.phase = Phase.SEEKING
            agent.item_id = None
            agent.deliveries += 1
            agent.cumulative_reward += DELIVERY_REWARD
            if agent.first_delivery_step is None:
                agent.first_delivery_step = now
            events.append(DeliveryEvent(agent.id, item_id, agent.pos, now))
            events.append(_spawn_item(state, now))
    return state, events


def _spawn_item(state: WorldState, now: int) -> SpawnEvent:
    occupied = {a.pos for a in state.agents}
    taken = state.queue.locations() | occupied
    eligible = sorted(state.map.shelf_cells - taken)
    if not eligible:
        raise RuntimeError("no free shelf cell left to spawn a new request on")
    cell = state.rng.choice(eligible)
    item_id = state.next_item_id
    state.next_item_id += 1
    state.queue.items[item_id] = cell
    return SpawnEvent(item_id, cell, now)


def event_to_dict(event: Event) -> dict:
    """JSON-able form of an event, used by episode traces."""
    if isinstance(event, PickupEvent):
        return {"kind": "pickup", "agent": event.agent_id, "item": event.item_id,
                "x": event.cell[0], "y": event.cell[1], "step": event.step}
    if isinstance(event, DeliveryEvent):
        return {"kind": "delivery", "agent": event.agent_id, "item": event.item_id,
                "x": event.cell[0], "y": event.cell[1], "step": event.step}
    return {"kind": "spawn", "item": event.item_id,
            "x": event.cell[0], "y": event.cell[1], "step": event.step}
