"""Simulator tests: map parsing, episode setup, movement rules, events, and
the random-walk invariant sweep."""

from __future__ import annotations

import random

import pytest

from envwalk import check_state_invariants, random_safe_moves
from mapdbench.warehouse import (
    EdgeSwapError,
    IllegalMoveError,
    MapFormatError,
    Move,
    Phase,
    PickupEvent,
    DeliveryEvent,
    SpawnEvent,
    VertexCollisionError,
    apply_joint_moves,
    init_episode,
    legal_moves,
    load_fixture,
    load_map,
    move_between,
)


# ---------------------------------------------------------------------------
# map parsing


def test_parse_tiny_map():
    grid = load_map(".S.\nDDD")
    assert (grid.width, grid.height) == (3, 2)
    assert grid.shelf_cells == {(1, 0)}
    assert grid.delivery_cells == {(0, 1), (1, 1), (2, 1)}
    assert grid.corridor_cells == {(0, 0), (2, 0)}


def test_parse_rejects_missing_delivery_row():
    with pytest.raises(MapFormatError, match="not a delivery cell"):
        load_map("..\n..")


def test_parse_rejects_ragged_rows():
    with pytest.raises(MapFormatError, match="ragged"):
        load_map("...\n..\nDDD")


def test_parse_rejects_illegal_character():
    with pytest.raises(MapFormatError, match="illegal character"):
        load_map(".X.\nDDD")


def test_parse_rejects_delivery_off_bottom_row():
    with pytest.raises(MapFormatError, match="off the bottom row"):
        load_map(".D.\nDDD")


def test_parse_rejects_disconnected_corridors():
    # Shelves wall off the top-left corridor cell completely.
    with pytest.raises(MapFormatError, match="disconnected"):
        load_map(".S..\nSS..\nDDDD")


def test_parse_rejects_landlocked_shelf():
    # Center shelf of a 3x3 shelf block touches no corridor.
    with pytest.raises(MapFormatError, match="no adjacent corridor"):
        load_map(".....\n.SSS.\n.SSS.\n.SSS.\n.....\nDDDDD")


def test_parse_skips_comment_lines():
    grid = load_map("# header\n# more\n.S.\nDDD")
    assert (grid.width, grid.height) == (3, 2)


def test_serialize_roundtrips_text_exactly():
    text = ".S.\nDDD\n"
    assert load_map(text).serialize() == text
    # Comments and a missing trailing newline are the allowed differences.
    assert load_map("# note\n.S.\nDDD").serialize() == text


@pytest.mark.parametrize("name", ["small", "medium", "large"])
def test_fixture_roundtrip_and_header(name):
    grid = load_fixture(name)
    # serialize(parse(text)) reproduces the grid modulo comments.
    again = load_map(grid.serialize(), name=name)
    assert again.rows == grid.rows
    # The header comment states the dimensions.
    from importlib import resources

    text = resources.files("mapdbench.maps").joinpath(f"{name}.map").read_text()
    header = text.splitlines()[0]
    assert f"{grid.width}x{grid.height}" in header


@pytest.mark.parametrize("name", ["small", "medium", "large"])
def test_fixture_layout_invariants(name):
    grid = load_fixture(name)
    bottom = grid.height - 1
    assert all(cell[1] == bottom for cell in grid.delivery_cells)
    assert len(grid.delivery_cells) == grid.width
    assert len(grid.corridor_cells) >= 8
    assert len(grid.shelf_cells) >= 16


# ---------------------------------------------------------------------------
# episode setup


def test_init_episode_deterministic():
    grid = load_fixture("small")
    a = init_episode(grid, 4, seed=7)
    b = init_episode(grid, 4, seed=7)
    assert a == b
    assert a.snapshot() == b.snapshot()


def test_init_episode_seed_changes_layout():
    grid = load_fixture("small")
    assert init_episode(grid, 4, seed=0) != init_episode(grid, 4, seed=1)


def test_init_episode_postconditions():
    grid = load_fixture("small")
    state = init_episode(grid, 5, seed=0)
    assert len({a.pos for a in state.agents}) == 5
    assert all(a.pos in grid.corridor_cells for a in state.agents)
    assert len(state.queue) == 5
    assert len(state.queue.locations()) == 5
    assert all(cell in grid.shelf_cells for cell in state.queue.locations())
    assert state.step == 0
    assert all(
        a.pickups == a.deliveries == a.cumulative_reward == 0 and a.first_delivery_step is None
        for a in state.agents
    )


def test_init_episode_rejects_too_few_shelves():
    grid = load_map(".S.\nDDD")
    with pytest.raises(ValueError, match="shelf"):
        init_episode(grid, 2, seed=0)


# ---------------------------------------------------------------------------
# movement rules


def _tiny_state(n_agents=1, seed=0):
    grid = load_map("...\n.S.\n...\nDDD")
    return init_episode(grid, n_agents, seed=seed)


def test_legal_moves_seeking_includes_shelf():
    state = _tiny_state()
    state.agents[0].pos = (1, 0)  # directly above the shelf
    assert Move.DOWN in legal_moves(state, 0)
    assert Move.WAIT in legal_moves(state, 0)


def test_legal_moves_carrying_excludes_shelf():
    state = _tiny_state()
    state.agents[0].pos = (1, 0)
    state.agents[0].phase = Phase.CARRYING
    moves = legal_moves(state, 0)
    assert Move.DOWN not in moves
    assert moves == {Move.WAIT, Move.LEFT, Move.RIGHT}


def test_legal_moves_at_corner():
    state = _tiny_state()
    state.agents[0].pos = (0, 0)
    assert legal_moves(state, 0) == {Move.WAIT, Move.DOWN, Move.RIGHT}


def test_legal_moves_invalid_agent():
    with pytest.raises(IndexError):
        legal_moves(_tiny_state(), 5)


# ---------------------------------------------------------------------------
# joint moves and events


def test_all_wait_only_advances_step():
    grid = load_map(".SS\n...\nDDD")
    state = init_episode(grid, 2, seed=0)
    before = state.snapshot()
    _, events = apply_joint_moves(state, [Move.WAIT, Move.WAIT])
    assert events == []
    after = state.snapshot()
    assert after[1] == before[1]  # agents untouched
    assert state.step == 1


def test_vertex_collision_rejected():
    grid = load_map(".SS\n...\nDDD")
    state = init_episode(grid, 2, seed=3)
    state.agents[0].pos = (0, 0)
    state.agents[1].pos = (2, 0)
    with pytest.raises(VertexCollisionError, match="agents 0 and 1"):
        apply_joint_moves(state, [Move.RIGHT, Move.LEFT])


def test_edge_swap_rejected():
    grid = load_map(".SS\n...\nDDD")
    state = init_episode(grid, 2, seed=3)
    state.agents[0].pos = (0, 0)
    state.agents[1].pos = (1, 0)
    with pytest.raises(EdgeSwapError, match="swap"):
        apply_joint_moves(state, [Move.RIGHT, Move.LEFT])


def test_following_move_allowed():
    grid = load_map(".SS\n...\nDDD")
    state = init_episode(grid, 2, seed=3)
    state.agents[0].pos = (0, 0)
    state.agents[1].pos = (1, 0)
    apply_joint_moves(state, [Move.RIGHT, Move.RIGHT])
    assert state.agents[0].pos == (1, 0)
    assert state.agents[1].pos == (2, 0)


def test_illegal_move_rejected():
    state = _tiny_state()
    state.agents[0].pos = (0, 0)
    with pytest.raises(IllegalMoveError, match="agent 0"):
        apply_joint_moves(state, [Move.UP])


def test_pickup_fires_only_for_assigned_item():
    state = _tiny_state()
    agent = state.agents[0]
    item_id, item_cell = next(iter(state.queue.items.items()))
    agent.pos = (item_cell[0], item_cell[1] - 1)
    agent.item_id = None  # unassigned: stepping on the item is not a pickup
    apply_joint_moves(state, [Move.DOWN])
    assert agent.phase is Phase.SEEKING and agent.pickups == 0

    agent.item_id = item_id  # assigned: moving back in picks it up
    apply_joint_moves(state, [Move.UP])
    _, events = apply_joint_moves(state, [Move.DOWN])
    assert agent.phase is Phase.CARRYING
    assert agent.pickups == 1 and agent.cumulative_reward == 1
    assert events == [PickupEvent(0, item_id, item_cell, state.step)]
    assert item_id in state.queue  # stays queued until delivered


def test_delivery_event_and_respawn():
    grid = load_map("...\n.S.\n...\nDDD")
    state = init_episode(grid, 1, seed=0)
    agent = state.agents[0]
    item_id = next(iter(state.queue.items))
    agent.pos = (0, 2)
    agent.phase = Phase.CARRYING
    agent.item_id = item_id
    agent.pickups = 1
    agent.cumulative_reward = 1
    _, events = apply_joint_moves(state, [Move.DOWN])
    assert agent.phase is Phase.SEEKING
    assert agent.item_id is None
    assert agent.deliveries == 1
    assert agent.cumulative_reward == 3
    assert agent.first_delivery_step == state.step
    kinds = [type(e) for e in events]
    assert kinds == [DeliveryEvent, SpawnEvent]
    # Queue size unchanged; the new item landed on the only shelf cell.
    assert len(state.queue) == 1
    assert state.queue.locations() == {(1, 1)}
    assert item_id not in state.queue


def test_first_delivery_step_sticks():
    grid = load_map("...\n.S.\n...\nDDD")
    state = init_episode(grid, 1, seed=0)
    agent = state.agents[0]
    for _ in range(2):
        agent.pos = (0, 2)
        agent.phase = Phase.CARRYING
        agent.item_id = next(iter(state.queue.items))
        apply_joint_moves(state, [Move.DOWN])
        apply_joint_moves(state, [Move.UP])
    assert agent.deliveries == 2
    assert agent.first_delivery_step == 1


def test_event_stream_deterministic():
    grid = load_fixture("small")

    def run(seed):
        state = init_episode(grid, 3, seed=seed)
        rng = random.Random(99)
        stream = []
        for _ in range(40):
            moves = random_safe_moves(state, rng)
            _, events = apply_joint_moves(state, moves)
            stream.append(tuple(events))
        return state.snapshot(), tuple(stream)

    assert run(5) == run(5)


# ---------------------------------------------------------------------------
# random-walk invariant property (episode-scale version lives in acceptance)


def test_random_walk_upholds_invariants_small():
    grid = load_fixture("small")
    state = init_episode(grid, 4, seed=11)
    rng = random.Random(0)
    for _ in range(400):
        moves = random_safe_moves(state, rng)
        _, events = apply_joint_moves(state, moves)
        check_state_invariants(state, events)


def test_move_between_roundtrip():
    for move in Move:
        assert move_between((3, 3), move.target((3, 3))) is move
    with pytest.raises(ValueError):
        move_between((0, 0), (2, 0))
