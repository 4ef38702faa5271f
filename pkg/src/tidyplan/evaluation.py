"""Benchmark harness: held-out-template episodes per environment with the
tree-search planner or the random/greedy baselines, aggregated the way the
simulation table reports them (success rate, tidiness, length).  Also the
single source of truth for human-session edit totals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels, mcts
from .categories import ENV_TAGS
from .datagen import generate_trajectory, split_templates
from .templates import Template, load_library
from .world import ActionSpec, Scene, apply_action

MOVE_OPS = ("move-up", "move-down", "move-left", "move-right")
ROTATE_OPS = ("rotate-cw", "rotate-ccw")
EVENT_OPS = MOVE_OPS + ROTATE_OPS + ("select",)

MOVE_STEP_M = 0.01
ROTATE_STEP_DEG = 10.0


def uniform_feasible_action(scene: Scene, rng: np.random.Generator, max_tries: int = 200) -> ActionSpec:
    """Uniform draw over feasible (object, cell, rotation) placements."""
    ws = scene.workspace
    p = scene.packed
    n = len(scene.objects)
    for _ in range(max_tries):
        k = int(rng.integers(n))
        xi = int(rng.integers(ws.grid_w))
        yi = int(rng.integers(ws.grid_h))
        r = int(rng.integers(ws.rotation_bins))
        x, y = ws.cell_center(xi, yi)
        if kernels.placement_feasible(
            p.poses, p.half, p.support, k, x, y, ws.bin_angle(r), ws.width_m, ws.depth_m
        ):
            return ActionSpec(object_id=int(p.ids[k]), cell=(xi, yi), rotation_bin=r)
    mask = kernels.placement_mask(
        p.poses, p.half, p.support, ws.width_m, ws.depth_m, ws.grid_h, ws.grid_w, ws.rotation_bins
    )
    flat = np.flatnonzero(mask.ravel())
    if flat.size == 0:
        raise ValueError("no feasible action")
    k, xi, yi, r = np.unravel_index(int(rng.choice(flat)), mask.shape)
    return ActionSpec(object_id=int(p.ids[k]), cell=(int(xi), int(yi)), rotation_bin=int(r))


def greedy_action(scene: Scene, score_fn) -> ActionSpec:
    """Single action maximizing the one-step score; ties to the lowest key."""
    ws = scene.workspace
    p = scene.packed
    mask = kernels.placement_mask(
        p.poses, p.half, p.support, ws.width_m, ws.depth_m, ws.grid_h, ws.grid_w, ws.rotation_bins
    )
    best = None
    best_key = None
    for k, xi, yi, r in zip(*np.nonzero(mask)):
        action = ActionSpec(object_id=int(p.ids[k]), cell=(int(xi), int(yi)), rotation_bin=int(r))
        key = (-score_fn(apply_action(scene, action)), action.sort_key())
        if best_key is None or key < best_key:
            best, best_key = action, key
    if best is None:
        raise ValueError("no feasible action")
    return best


@dataclass(frozen=True)
class EnvRow:
    environment: str
    episodes: int
    success_rate: float
    mean_tidiness: float
    mean_length: float
    failures: dict[str, int]


@dataclass(frozen=True)
class BenchmarkReport:
    planner: str
    seed: int
    episodes_per_env: int
    rows: tuple[EnvRow, ...]

    def row(self, environment: str) -> EnvRow:
        for r in self.rows:
            if r.environment == environment:
                return r
        raise KeyError(environment)

    def to_dict(self) -> dict:
        return {
            "planner": self.planner,
            "seed": self.seed,
            "episodes_per_env": self.episodes_per_env,
            "rows": [
                {
                    "environment": r.environment,
                    "episodes": r.episodes,
                    "success_rate": r.success_rate,
                    "mean_tidiness": r.mean_tidiness,
                    "mean_length": r.mean_length,
                    "failures": dict(sorted(r.failures.items())),
                }
                for r in self.rows
            ],
        }


def _episode_initial(template: Template, seed: int, scatter_depth: int = 5) -> Scene:
    return generate_trajectory(template, T=scatter_depth, rng_seed=seed).steps[0][0]


def _held_out(library: list[Template], environments, split_seed: int) -> dict[str, list[Template]]:
    assignment = split_templates(library, seed=split_seed)
    validation = sorted(
        (t for t in library if assignment[t.id] == "validation"), key=lambda t: t.id
    )
    held = {env: [t for t in validation if t.environment_tag == env] for env in environments}
    missing = [env for env, ts in held.items() if not ts]
    if missing:
        raise ValueError(f"no held-out templates for environments {missing}")
    return held


def run_benchmark(
    models: mcts.PlannerModels,
    environments=ENV_TAGS,
    episodes_per_env: int = 100,
    config: mcts.SearchConfig = mcts.SearchConfig(),
    seed: int = 0,
    planner: str = "tsmcts",
    library: list[Template] | None = None,
    split_seed: int = 0,
    max_steps: int = 10,
) -> BenchmarkReport:
    """Held-out-template episodes per environment; deterministic per seed.

    The random baseline replaces the per-step search with a uniform feasible
    draw; greedy takes the best one-step score.  Episode seeds depend only on
    (seed, environment, index), so planners compared at the same seed face
    identical initial scenes.
    """
    if episodes_per_env < 1:
        raise ValueError("empty benchmark")
    if planner not in ("tsmcts", "random", "greedy"):
        raise ValueError(f"unknown planner {planner!r}")
    lib = load_library() if library is None else library
    held = _held_out(lib, environments, split_seed)
    rows = []
    for env in environments:
        pool = held[env]
        finals, lengths, failures = [], [], {}
        successes = 0
        for k in range(episodes_per_env):
            ss = np.random.SeedSequence(seed, spawn_key=(ENV_TAGS.index(env), k))
            pick_rng = np.random.default_rng(ss)
            template = pool[int(pick_rng.integers(len(pool)))]
            scene_seed = int(pick_rng.integers(2**32))
            plan_seed = int(pick_rng.integers(2**32))
            initial = _episode_initial(template, scene_seed)
            if planner == "tsmcts":
                result = mcts.plan_episode(initial, models, config, plan_seed, max_steps)
            elif planner == "random":
                rng = np.random.default_rng(plan_seed)
                result = mcts.episode_loop(
                    initial,
                    models.score_fn,
                    lambda scene, step: uniform_feasible_action(scene, rng),
                    config.threshold,
                    max_steps,
                )
            else:
                result = mcts.episode_loop(
                    initial,
                    models.score_fn,
                    lambda scene, step: greedy_action(scene, models.score_fn),
                    config.threshold,
                    max_steps,
                )
            finals.append(result.final_score)
            lengths.append(result.length)
            if result.status == "success":
                successes += 1
            else:
                failures[result.status] = failures.get(result.status, 0) + 1
        rows.append(
            EnvRow(
                environment=env,
                episodes=episodes_per_env,
                success_rate=successes / episodes_per_env,
                mean_tidiness=float(np.mean(finals)),
                mean_length=float(np.mean(lengths)),
                failures=failures,
            )
        )
    average = EnvRow(
        environment="Average",
        episodes=episodes_per_env * len(rows),
        success_rate=float(np.mean([r.success_rate for r in rows])),
        mean_tidiness=float(np.mean([r.mean_tidiness for r in rows])),
        mean_length=float(np.mean([r.mean_length for r in rows])),
        failures={
            status: sum(r.failures.get(status, 0) for r in rows)
            for status in sorted({s for r in rows for s in r.failures})
        },
    )
    return BenchmarkReport(
        planner=planner,
        seed=seed,
        episodes_per_env=episodes_per_env,
        rows=(*rows, average),
    )


def format_report_table(report: BenchmarkReport) -> str:
    """CSV with the simulation table's column layout."""
    lines = ["environment,success_rate,tidiness_score,length"]
    for r in report.rows:
        lines.append(
            f"{r.environment},{r.success_rate:.3f},{r.mean_tidiness:.3f},{r.mean_length:.3f}"
        )
    return "\n".join(lines) + "\n"


def recount_session(log) -> dict:
    """Authoritative edit totals for a recorded session: 1 cm per move op,
    10 degrees per rotate op.  op_count tallies the edits themselves;
    selection changes are recorded in the log but move nothing."""
    distance_cm = 0.0
    rotation_deg = 0.0
    op_count = 0
    for i, event in enumerate(log.events):
        op = event.op if hasattr(event, "op") else event["op"]
        if op not in EVENT_OPS:
            raise ValueError(f"malformed event at index {i}")
        if op in MOVE_OPS:
            distance_cm += MOVE_STEP_M * 100.0
            op_count += 1
        elif op in ROTATE_OPS:
            rotation_deg += ROTATE_STEP_DEG
            op_count += 1
    return {
        "distance_cm": distance_cm,
        "rotation_deg": rotation_deg,
        "op_count": op_count,
    }
