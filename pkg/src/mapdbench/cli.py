"""Command-line front end.

Subcommands:
  bench    run a benchmark matrix and write the per-episode CSV
  episode  run a single lifelong episode, optionally tracing/rendering it
  solve    solve one single-shot instance from a scenario file (debug aid)

A scenario file names a map on its first non-comment line (a fixture name
or a path, resolved relative to the scenario file) followed by one line
per agent: ``<agent> <start_x> <start_y> <goal_x> <goal_y>``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path as FSPath

from . import bench
from .cbs import MAPFInstance, SolverBudget, cbs_solve
from .mapf import PlanningGraph
from .warehouse import FIXTURE_NAMES, WarehouseMap


def _comma_ints(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.split(",") if part != "")


def _comma_strs(text: str) -> tuple[str, ...]:
    return tuple(part for part in text.split(",") if part != "")


def _add_budget_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--max-expansions", type=int, default=50_000,
                        help="CBS node expansion budget per solve")
    parser.add_argument("--replan-timeout-secs", type=float, default=30.0,
                        help="wall-time budget per CBS solve")


def _budget(args: argparse.Namespace) -> SolverBudget:
    return SolverBudget(max_expansions=args.max_expansions, wall_time_limit=args.replan_timeout_secs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mapdbench",
                                     description="warehouse pickup-and-delivery benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    p_bench = sub.add_parser("bench", help="run a benchmark matrix")
    p_bench.add_argument("--map", type=_comma_strs, default=("small",),
                         help="comma-separated map names (small|medium|large) or paths")
    p_bench.add_argument("--agents", type=_comma_ints, default=(2,),
                         help="comma-separated agent counts")
    p_bench.add_argument("--seeds", type=_comma_ints, default=bench.DEFAULT_SEEDS,
                         help="comma-separated seeds")
    p_bench.add_argument("--episodes", type=int, default=bench.DEFAULT_EPISODES,
                         help="episodes per seed")
    p_bench.add_argument("--steps", type=int, default=bench.DEFAULT_HORIZON,
                         help="steps per episode")
    p_bench.add_argument("--out", default="results.csv", help="output CSV path")
    p_bench.add_argument("--parallel", action="store_true",
                         help="run episodes on worker processes (wall times contended)")
    _add_budget_flags(p_bench)

    p_ep = sub.add_parser("episode", help="run a single episode")
    p_ep.add_argument("--map", default="small", help="map name or path")
    p_ep.add_argument("--agents", type=int, default=2)
    p_ep.add_argument("--seed", type=int, default=0)
    p_ep.add_argument("--episode", type=int, default=0, help="episode index under the seed")
    p_ep.add_argument("--steps", type=int, default=bench.DEFAULT_HORIZON)
    p_ep.add_argument("--trace", default=None, metavar="OUT.JSONL",
                      help="write the step-by-step trace to this file")
    p_ep.add_argument("--render", action="store_true",
                      help="print an ASCII frame after every step")
    _add_budget_flags(p_ep)

    p_solve = sub.add_parser("solve", help="solve a single-shot scenario file")
    p_solve.add_argument("scenario", help="scenario file path")
    p_solve.add_argument("--seed", type=int, default=0, help="conflict-choice seed")
    _add_budget_flags(p_solve)
    return parser


def _cmd_bench(args: argparse.Namespace) -> int:
    budget = _budget(args)
    cells = [
        bench.BenchConfig(
            map=map_name,
            n_agents=n,
            seeds=args.seeds,
            episodes_per_seed=args.episodes,
            horizon=args.steps,
            budget=budget,
        )
        for map_name in args.map
        for n in args.agents
    ]
    rows = bench.run_suite(cells, parallel=args.parallel)
    FSPath(args.out).write_text(bench.emit_csv(rows), encoding="utf-8")
    print(f"wrote {len(rows)} episode rows to {args.out}")
    if args.parallel:
        print("note: episodes ran in parallel; wall_secs were measured under contention")
    _print_summary(bench.summarize(rows))
    return 0


def _print_summary(summary) -> None:
    print(f"{'map':<8} {'n':>2} {'flowtime':>16} {'makespan':>16} "
          f"{'reward':>14} {'delivered':>14} {'wall_secs':>14}")
    for (map_name, n), stats in sorted(summary.items()):
        def fmt(key: str) -> str:
            mean, se = stats[key]
            return f"{mean:.2f} ({se:.2f})"

        print(f"{map_name:<8} {n:>2} {fmt('flowtime'):>16} {fmt('makespan'):>16} "
              f"{fmt('mean_reward'):>14} {fmt('mean_delivered'):>14} {fmt('wall_secs'):>14}")


def _cmd_episode(args: argparse.Namespace) -> int:
    config = bench.BenchConfig(
        map=args.map,
        n_agents=args.agents,
        seeds=(args.seed,),
        episodes_per_seed=1,
        horizon=args.steps,
        budget=_budget(args),
    )
    metrics, trace = bench.run_episode_with_trace(config, args.seed, args.episode)
    if args.render:
        for record in trace.records:
            print(f"step {record['step']}:")
            print(bench.render_frame(trace.grid, record["agents"], record["items"]))
            print()
    if args.trace:
        bench.write_trace(args.trace, trace)
        print(f"trace written to {args.trace}")
    print(
        f"map={args.map} agents={args.agents} seed={args.seed} episode={args.episode}\n"
        f"flowtime={metrics.flowtime} makespan={metrics.makespan} "
        f"mean_reward={metrics.mean_reward:.2f} mean_delivered={metrics.mean_delivered:.2f}\n"
        f"wall_secs={metrics.wall_secs:.3f} replans={metrics.replans} "
        f"replan_failures={metrics.replan_failures} truncated={int(metrics.truncated)}"
    )
    return 0


def parse_scenario(path: str | FSPath) -> tuple[WarehouseMap, list[tuple[int, int]], list[tuple[int, int]]]:
    """Read a scenario file: the map reference, then starts and goals."""
    path = FSPath(path)
    lines = [ln.strip() for ln in path.read_text(encoding="utf-8").splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError(f"scenario file {path} is empty")
    map_ref = lines[0]
    if map_ref in FIXTURE_NAMES:
        grid = bench.resolve_map(map_ref)
    else:
        map_path = FSPath(map_ref)
        if not map_path.is_absolute():
            map_path = path.parent / map_path
        grid = bench.resolve_map(str(map_path))
    entries = {}
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 5:
            raise ValueError(f"bad scenario line: {ln!r}")
        agent, sx, sy, gx, gy = (int(p) for p in parts)
        if agent in entries:
            raise ValueError(f"duplicate agent {agent} in scenario")
        entries[agent] = ((sx, sy), (gx, gy))
    if sorted(entries) != list(range(len(entries))):
        raise ValueError(f"scenario must define agents 0..{len(entries) - 1}")
    starts = [entries[i][0] for i in range(len(entries))]
    goals = [entries[i][1] for i in range(len(entries))]
    return grid, starts, goals


def _cmd_solve(args: argparse.Namespace) -> int:
    grid, starts, goals = parse_scenario(args.scenario)
    base = set(grid.corridor_cells) | set(grid.delivery_cells)
    graphs = []
    for start, goal in zip(starts, goals):
        # Open up an agent's own start/goal shelf cells, mirroring how the
        # lifelong planner treats an agent's own item cell.
        cells = set(base)
        for cell in (start, goal):
            if grid.in_bounds(cell) and grid.is_shelf(cell):
                cells.add(cell)
        graphs.append(PlanningGraph(cells))
    instance = MAPFInstance(graphs, starts, goals)
    result = cbs_solve(instance, seed=args.seed, budget=_budget(args))
    print(f"status={result.status.value} expansions={result.expansions} "
          f"wall_secs={result.wall_secs:.3f}")
    if result.solved:
        assert result.paths is not None
        print(f"sum_of_costs={result.cost}")
        for path in result.paths:
            cells = " ".join(f"({x},{y})" for x, y in path.vertices)
            print(f"agent {path.agent_id} cost={path.cost}: {cells}")
        return 0
    return 1


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "bench":
        return _cmd_bench(args)
    if args.command == "episode":
        return _cmd_episode(args)
    return _cmd_solve(args)


if __name__ == "__main__":
    sys.exit(main())
