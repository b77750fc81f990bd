"""
Warehouse simulator basics
==========================

Load a shipped layout, start a seeded episode, and step the world by hand.
"""

import random

from mapdbench import (
    Move,
    apply_joint_moves,
    init_episode,
    legal_moves,
    load_fixture,
)
from mapdbench.bench import render_frame
from mapdbench.lifelong import trace_record

# The three shipped layouts.  '.' corridor, 'S' shelf rack, 'D' delivery row.
grid = load_fixture("small")
print(f"{grid.name}: {grid.width}x{grid.height}, "
      f"{len(grid.corridor_cells)} corridor / {len(grid.shelf_cells)} shelf / "
      f"{len(grid.delivery_cells)} delivery cells")
print(grid.serialize())

# A seeded episode: agents on random corridor cells, one requested item per
# agent on random shelves.  Same seed, same world.
state = init_episode(grid, n_agents=3, seed=42)
record = trace_record(state)
print(render_frame(grid, record["agents"], record["items"]))
print("agents:", [(a.id, a.pos) for a in state.agents])
print("requested items:", dict(state.queue.items))

# Moves are 4-connected plus waiting.  Loaded agents may not cross shelves;
# empty-handed agents may.  The caller supplies one move per agent and the
# simulator enforces that the joint move is collision-free.
print("\nlegal moves for agent 0:", sorted(m.name for m in legal_moves(state, 0)))

rng = random.Random(0)
for step in range(5):
    moves = []
    held = {a.pos for a in state.agents}
    chosen = set()
    for agent in state.agents:
        options = [
            m for m in legal_moves(state, agent.id)
            if m.target(agent.pos) not in chosen
            and (m is Move.WAIT or m.target(agent.pos) not in held)
        ]
        move = rng.choice(options) if options else Move.WAIT
        chosen.add(move.target(agent.pos))
        moves.append(move)
    _, events = apply_joint_moves(state, moves)
    print(f"step {state.step}: moves={[m.name for m in moves]} events={events}")

record = trace_record(state)
print()
print(render_frame(grid, record["agents"], record["items"]))
