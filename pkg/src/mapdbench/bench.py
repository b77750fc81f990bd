"""Evaluation harness: seeded episode runs, the five per-episode metrics,
suite aggregation with standard errors, CSV emission, and an ASCII renderer
for episode traces.

Per episode the harness records the first-delivery flowtime (sum over
agents of the step of their first delivery) and makespan (max over agents),
the mean cumulative reward and mean delivered items per agent, and the
wall-clock episode time including all replanning.  An agent that never
delivers contributes the full horizon to flowtime/makespan and flags the
episode as truncated.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path as FSPath

import numpy as np

from .cbs import SolverBudget
from .lifelong import LifelongConfig, PlanCache, step_episode, trace_record
from .warehouse import FIXTURE_NAMES, WarehouseMap, init_episode, load_fixture, load_map

CSV_HEADER = (
    "map,agents,seed,episode,flowtime,makespan,mean_reward,mean_delivered,"
    "wall_secs,replans,replan_failures,truncated"
)

DEFAULT_SEEDS = (0, 1, 2, 3, 4)
DEFAULT_EPISODES = 4
DEFAULT_HORIZON = 500

# Set once the first episode of this process has run; that episode's wall
# time is flagged as warm-up and excluded from timing aggregates.
_warmed_up = False


@dataclass(frozen=True)
class BenchConfig:
    map: str = "small"
    n_agents: int = 2
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    episodes_per_seed: int = DEFAULT_EPISODES
    horizon: int = DEFAULT_HORIZON
    budget: SolverBudget = field(default_factory=SolverBudget)


@dataclass(frozen=True)
class EpisodeMetrics:
    flowtime: int
    makespan: int
    mean_reward: float
    mean_delivered: float
    wall_secs: float
    replans: int
    replan_failures: int
    truncated: bool
    degraded: bool
    replan_wall_secs: float
    steps: int


@dataclass(frozen=True)
class EpisodeRow:
    map_name: str
    n_agents: int
    seed: int
    episode: int
    metrics: EpisodeMetrics
    timing_warmup: bool = False


_MAP_CACHE: dict[str, WarehouseMap] = {}


def resolve_map(name_or_path: str) -> WarehouseMap:
    """A fixture name (small/medium/large) or a path to a map file."""
    cached = _MAP_CACHE.get(name_or_path)
    if cached is not None:
        return cached
    if name_or_path in FIXTURE_NAMES:
        grid = load_fixture(name_or_path)
    else:
        path = FSPath(name_or_path)
        grid = load_map(path.read_text(encoding="utf-8"), name=path.stem)
    _MAP_CACHE[name_or_path] = grid
    return grid


def episode_env_seed(seed: int, episode_index: int) -> int:
    """Derived per-episode seed so each (seed, episode) pair differs."""
    return seed * 1009 + episode_index


def first_delivery_stats(first_delivery_steps: list[int | None], horizon: int) -> tuple[int, int, bool]:
    """Flowtime and makespan over first deliveries; an agent that never
    delivered contributes the full horizon and marks the episode truncated."""
    firsts = [s if s is not None else horizon for s in first_delivery_steps]
    truncated = any(s is None for s in first_delivery_steps)
    return sum(firsts), max(firsts), truncated


def run_episode(
    config: BenchConfig,
    seed: int,
    episode_index: int,
    collect_trace: bool = False,
) -> tuple[EpisodeMetrics, list[dict] | None]:
    """Drive one full episode and measure its metrics.

    The wall clock covers the whole loop, replanning included.  Solver
    failures are recorded in the metrics, never raised.
    """
    global _warmed_up
    grid = resolve_map(config.map)
    env_seed = episode_env_seed(seed, episode_index)
    state = init_episode(grid, config.n_agents, env_seed)
    cache = PlanCache.fresh(config.n_agents, solver_seed=env_seed * 2 + 1)
    lifelong_config = LifelongConfig(budget=config.budget)

    records: list[dict] | None = [trace_record(state)] if collect_trace else None
    replan_failures = 0
    replan_wall = 0.0
    t0 = time.perf_counter()
    for _ in range(config.horizon):
        state, cache, report = step_episode(state, cache, lifelong_config)
        if report.replan_failed:
            replan_failures += 1
        replan_wall += report.replan_wall_secs
        if records is not None:
            records.append(trace_record(state, report))
    wall = time.perf_counter() - t0

    n = config.n_agents
    flowtime, makespan, truncated = first_delivery_stats(
        [a.first_delivery_step for a in state.agents], config.horizon
    )
    metrics = EpisodeMetrics(
        flowtime=flowtime,
        makespan=makespan,
        mean_reward=sum(a.cumulative_reward for a in state.agents) / n,
        mean_delivered=sum(a.deliveries for a in state.agents) / n,
        wall_secs=wall,
        replans=cache.replans,
        replan_failures=replan_failures,
        truncated=truncated,
        degraded=cache.degraded,
        replan_wall_secs=replan_wall,
        steps=config.horizon,
    )
    _warmed_up = True
    return metrics, records


def _episode_job(args: tuple[BenchConfig, int, int]) -> EpisodeRow:
    config, seed, episode = args
    warmup = not _warmed_up
    metrics, _ = run_episode(config, seed, episode)
    return EpisodeRow(config.map, config.n_agents, seed, episode, metrics, timing_warmup=warmup)


def run_suite(cells: list[BenchConfig], parallel: bool = False, workers: int = 4) -> list[EpisodeRow]:
    """Run every (seed, episode) of every cell; returns one row per episode.

    Sequential by default.  With ``parallel`` the episodes are spread over
    worker processes; non-timing results are identical, but wall times are
    measured under contention and should be read accordingly.
    """
    jobs = [
        (config, seed, episode)
        for config in cells
        for seed in config.seeds
        for episode in range(config.episodes_per_seed)
    ]
    if parallel and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_episode_job, jobs))
    else:
        rows = [_episode_job(job) for job in jobs]
    return rows


def summarize(rows: list[EpisodeRow]) -> dict[tuple[str, int], dict[str, tuple[float, float]]]:
    """Per (map, agents) cell: mean and standard error of each metric.

    The standard error is the sample standard deviation over episode values
    divided by sqrt(#episodes); a single episode gets s.e. 0.  Wall-time
    aggregates skip episodes flagged as process warm-up.
    """
    cells: dict[tuple[str, int], list[EpisodeRow]] = {}
    for row in rows:
        cells.setdefault((row.map_name, row.n_agents), []).append(row)

    def mean_se(values: list[float]) -> tuple[float, float]:
        arr = np.asarray(values, dtype=float)
        if arr.size == 0:
            return (float("nan"), float("nan"))
        if arr.size == 1:
            return (float(arr[0]), 0.0)
        return (float(arr.mean()), float(arr.std(ddof=1) / np.sqrt(arr.size)))

    summary: dict[tuple[str, int], dict[str, tuple[float, float]]] = {}
    for key, cell_rows in cells.items():
        timed = [r for r in cell_rows if not r.timing_warmup] or cell_rows
        summary[key] = {
            "flowtime": mean_se([r.metrics.flowtime for r in cell_rows]),
            "makespan": mean_se([r.metrics.makespan for r in cell_rows]),
            "mean_reward": mean_se([r.metrics.mean_reward for r in cell_rows]),
            "mean_delivered": mean_se([r.metrics.mean_delivered for r in cell_rows]),
            "wall_secs": mean_se([r.metrics.wall_secs for r in timed]),
            "replans": mean_se([r.metrics.replans for r in cell_rows]),
            "replan_failures": mean_se([r.metrics.replan_failures for r in cell_rows]),
            "replan_wall_secs": mean_se([r.metrics.replan_wall_secs for r in timed]),
        }
    return summary


def emit_csv(rows: list[EpisodeRow]) -> str:
    """Per-episode results in the fixed benchmark CSV schema."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER.split(","))
    for row in rows:
        m = row.metrics
        writer.writerow(
            [
                row.map_name,
                row.n_agents,
                row.seed,
                row.episode,
                m.flowtime,
                m.makespan,
                repr(m.mean_reward),
                repr(m.mean_delivered),
                repr(m.wall_secs),
                m.replans,
                m.replan_failures,
                int(m.truncated),
            ]
        )
    return out.getvalue()


def parse_csv(text: str) -> list[EpisodeRow]:
    """Inverse of emit_csv (degraded/replan-time/steps fields are not part
    of the schema and come back zeroed)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != CSV_HEADER.split(","):
        raise ValueError(f"unexpected CSV header: {header}")
    rows = []
    for rec in reader:
        if not rec:
            continue
        metrics = EpisodeMetrics(
            flowtime=int(rec[4]),
            makespan=int(rec[5]),
            mean_reward=float(rec[6]),
            mean_delivered=float(rec[7]),
            wall_secs=float(rec[8]),
            replans=int(rec[9]),
            replan_failures=int(rec[10]),
            truncated=bool(int(rec[11])),
            degraded=False,
            replan_wall_secs=0.0,
            steps=0,
        )
        rows.append(EpisodeRow(rec[0], int(rec[1]), int(rec[2]), int(rec[3]), metrics))
    return rows


@dataclass
class Trace:
    """A rendered-up episode trace: the map plus one record per step."""

    grid: WarehouseMap
    records: list[dict]
    meta: dict = field(default_factory=dict)

    def record_at(self, step: int) -> dict:
        for record in self.records:
            if record.get("step") == step:
                return record
        raise IndexError(f"trace has no record for step {step}")


def write_trace(path: str | FSPath, trace: Trace) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {
            "type": "header",
            "map_name": trace.grid.name,
            "map": trace.grid.serialize(),
            **trace.meta,
        }
        fh.write(json.dumps(header) + "\n")
        for record in trace.records:
            fh.write(json.dumps(record) + "\n")


def load_trace(path: str | FSPath) -> Trace:
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("type") != "header":
        raise ValueError("trace file has no header record")
    header = lines[0]
    grid = load_map(header["map"], name=header.get("map_name", "custom"))
    meta = {k: v for k, v in header.items() if k not in ("type", "map", "map_name")}
    return Trace(grid, lines[1:], meta)


def render_frame(grid: WarehouseMap, agents: list[dict], items: list[list]) -> str:
    """One character per cell; agents (digits) take precedence over item
    markers ('*'), which take precedence over the cell kind."""
    rows = [list(row) for row in grid.rows]
    for item in items:
        _, x, y = item
        rows[y][x] = "*"
    for agent in agents:
        rows[agent["y"]][agent["x"]] = str(agent["id"] % 10)
    return "\n".join("".join(row) for row in rows)


def render_ascii(trace: Trace, step: int) -> str:
    """ASCII frame of the warehouse at one step of a trace."""
    record = trace.record_at(step)
    return render_frame(trace.grid, record["agents"], record["items"])


def run_episode_with_trace(config: BenchConfig, seed: int, episode_index: int) -> tuple[EpisodeMetrics, Trace]:
    """Convenience wrapper returning a renderable Trace."""
    metrics, records = run_episode(config, seed, episode_index, collect_trace=True)
    assert records is not None
    grid = resolve_map(config.map)
    meta = {
        "agents": config.n_agents,
        "seed": seed,
        "episode": episode_index,
        "horizon": config.horizon,
    }
    return metrics, Trace(grid, records, meta)
