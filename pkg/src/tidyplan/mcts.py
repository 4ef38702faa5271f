"""Monte Carlo tree search over pick-and-place actions, guided by the
tidiness scorer for values and the trained policy for proposals.

Each planner timestep builds a fresh tree.  An iteration descends through
fully expanded nodes by UCT, adds one child (proposals come from the policy;
duplicates are rejection-resampled), evaluates the child with the scorer plus
a short policy rollout, and backs the mixed value up the path.  Edge Q values
are cumulative sums; UCT reads Q(s,a)/N(s,a).  Every node carries one
creation visit, so N(s) = 1 + sum of its edge visits stays true after every
iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .world import ActionSpec, Scene, apply_action, check_overlap, in_bounds


@dataclass
class Edge:
    child: "TreeNode"
    visits: int = 0
    value_sum: float = 0.0


@dataclass
class TreeNode:
    scene: Scene
    visits: int = 1  # creation visit
    edges: dict[ActionSpec, Edge] = field(default_factory=dict)
    fully_expanded: bool = False


@dataclass(frozen=True)
class SearchConfig:
    iterations: int = 200
    exploration: float = 1.0
    mixing: float = 0.3
    rollout_horizon: int = 5
    threshold: float = 0.85
    width: int = 8

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0.0 <= self.mixing <= 1.0:
            raise ValueError("mixing must lie in [0,1]")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must lie in (0,1)")


@dataclass(frozen=True)
class PlannerModels:
    """What the search needs from learned components: a scene scorer and an
    action proposal sampler.  Oracles plug in through the same interface."""

    score_fn: Callable[[Scene], float]
    sampler: Callable[[Scene, np.random.Generator], ActionSpec]

    @staticmethod
    def from_checkpoints(disc_params, policy_params) -> "PlannerModels":
        from . import discriminator, policy

        return PlannerModels(
            score_fn=lambda scene: discriminator.score(disc_params, scene),
            sampler=policy.ProposalSampler(policy_params),
        )


def uct_select(node: TreeNode, c: float) -> ActionSpec:
    """Highest Q(s,a)/N(s,a) + c*sqrt(2 ln N(s) / N(s,a)); unvisited edges
    first; ties to the lowest (object_id, x, y, r)."""
    if not node.edges:
        raise ValueError("leaf node")
    fresh = [a for a, e in node.edges.items() if e.visits == 0]
    if fresh:
        return min(fresh, key=ActionSpec.sort_key)
    log_n = np.log(node.visits)
    best = None
    best_key = None
    for a, e in node.edges.items():
        score = e.value_sum / e.visits + c * np.sqrt(2.0 * log_n / e.visits)
        key = (-score, a.sort_key())
        if best_key is None or key < best_key:
            best, best_key = a, key
    return best


def expand(
    node: TreeNode, models: PlannerModels, width: int, rng_seed
) -> TreeNode | None:
    """Adds one child for a policy-proposed action not yet tried here, or
    marks the node fully expanded when the budget is spent or 50 proposals in
    a row were duplicates.  Returns the child, None when none was added."""
    if node.fully_expanded or len(node.edges) >= width:
        node.fully_expanded = True
        return None
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    for _ in range(50):
        try:
            action = models.sampler(node.scene, rng)
        except ValueError as err:
            if "no feasible action" in str(err):
                node.fully_expanded = True
                return None
            raise
        if action in node.edges:
            continue
        child = TreeNode(scene=apply_action(node.scene, action))
        node.edges[action] = Edge(child=child)
        return child
    node.fully_expanded = True
    return None


def simulate(
    node: TreeNode, models: PlannerModels, rollout_horizon: int, threshold: float, rng_seed
) -> tuple[float, int]:
    """Scores the node's scene (V) and rolls the policy forward, reporting
    z=1 as soon as any visited state (the start included) clears the
    threshold."""
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    v = models.score_fn(node.scene)
    scene = node.scene
    value = v
    for step in range(rollout_horizon + 1):
        if value >= threshold:
            return v, 1
        if step == rollout_horizon:
            break
        try:
            action = models.sampler(scene, rng)
        except ValueError as err:
            if "no feasible action" in str(err):
                break  # rollout stranded; remaining states do not exist
            raise
        scene = apply_action(scene, action)
        value = models.score_fn(scene)
    return v, 0


def backpropagate(
    path: list[tuple[TreeNode, ActionSpec]], v: float, z: int, mixing: float,
    expanded: TreeNode | None = None,
) -> None:
    """Adds (1-mixing)*v + mixing*z to every edge on the path and bumps the
    visit counts.  A freshly created node ends the iteration at exactly its
    creation visit; counting it again would break N(s) = 1 + sum N(s,a)."""
    gain = (1.0 - mixing) * v + mixing * z
    for node, action in path:
        edge = node.edges[action]
        node.visits += 1
        edge.visits += 1
        edge.value_sum += gain
    if expanded is not None:
        expanded.visits = 1


@dataclass(frozen=True)
class SearchStats:
    iterations: int
    root_visits: int
    edge_visits: dict[ActionSpec, int]
    edge_means: dict[ActionSpec, float]


def _has_feasible_action(scene: Scene) -> bool:
    ws = scene.workspace
    p = scene.packed
    return bool(
        kernels.placement_mask(
            p.poses, p.half, p.support, ws.width_m, ws.depth_m, ws.grid_h, ws.grid_w, ws.rotation_bins
        ).any()
    )


def search(
    root_scene: Scene,
    models: PlannerModels,
    config: SearchConfig = SearchConfig(),
    rng_seed=0,
    on_iteration: Callable[[TreeNode], None] | None = None,
) -> tuple[ActionSpec, SearchStats]:
    """Runs K select/expand/simulate/backpropagate iterations and returns the
    most visited root action (ties to the lowest action key)."""
    if not _has_feasible_action(root_scene):
        raise ValueError("stuck")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    root = TreeNode(scene=root_scene)
    for _ in range(config.iterations):
        node = root
        path: list[tuple[TreeNode, ActionSpec]] = []
        expanded = None
        while True:
            if not node.fully_expanded and len(node.edges) < config.width:
                before = set(node.edges)
                child = expand(node, models, config.width, rng)
                if child is not None:
                    action = next(a for a in node.edges if a not in before)
                    path.append((node, action))
                    expanded = child
                    node = child
                    break
            if not node.edges:
                break  # dead end: no child can exist; evaluate the node itself
            action = uct_select(node, config.exploration)
            path.append((node, action))
            node = node.edges[action].child
        v, z = simulate(node, models, config.rollout_horizon, config.threshold, rng)
        backpropagate(path, v, z, config.mixing, expanded=expanded)
        if on_iteration is not None:
            on_iteration(root)
    if not root.edges:
        raise ValueError("stuck")
    top = max(e.visits for e in root.edges.values())
    best_action = min(
        (a for a, e in root.edges.items() if e.visits == top), key=ActionSpec.sort_key
    )
    stats = SearchStats(
        iterations=config.iterations,
        root_visits=root.visits,
        edge_visits={a: e.visits for a, e in root.edges.items()},
        edge_means={
            a: (e.value_sum / e.visits if e.visits else 0.0) for a, e in root.edges.items()
        },
    )
    return best_action, stats


@dataclass(frozen=True)
class EpisodeResult:
    trajectory: tuple[tuple[Scene, float], ...]  # scene and its score, per step
    status: str  # success | failure:collision | failure:out-of-bounds | failure:stuck | failure:timeout
    final_score: float
    length: int


def episode_loop(
    initial: Scene,
    score_fn: Callable[[Scene], float],
    act: Callable[[Scene, int], ActionSpec],
    threshold: float,
    max_steps: int = 10,
) -> EpisodeResult:
    """Shared execution loop for any per-step action chooser: stops on
    threshold (success), infeasibility (stuck), invalid scenes, or the step
    budget.  `act` raises ValueError("stuck") when it cannot move."""
    if not initial.objects:
        raise ValueError("scene nonempty required")
    scene = initial
    steps: list[tuple[Scene, float]] = [(scene, score_fn(scene))]
    status = None
    for step in range(max_steps + 1):
        if steps[-1][1] >= threshold:
            status = "success"
            break
        if step == max_steps:
            status = "failure:timeout"
            break
        try:
            action = act(scene, step)
        except ValueError as err:
            if "stuck" in str(err) or "no feasible action" in str(err):
                status = "failure:stuck"
                break
            raise
        scene = apply_action(scene, action)
        steps.append((scene, score_fn(scene)))
        if check_overlap(scene):
            status = "failure:collision"
            break
        if in_bounds(scene):
            status = "failure:out-of-bounds"
            break
    result_steps = tuple(steps)
    return EpisodeResult(
        trajectory=result_steps,
        status=status,
        final_score=result_steps[-1][1],
        length=len(result_steps) - 1,
    )


def plan_episode(
    initial: Scene,
    models: PlannerModels,
    config: SearchConfig = SearchConfig(),
    rng_seed=0,
    max_steps: int = 10,
) -> EpisodeResult:
    """Repeats search and execution until the scene scores at or above the
    threshold, a failure condition triggers, or the step budget runs out.
    The tree is rebuilt from scratch each step."""
    seeds = np.random.SeedSequence(rng_seed).spawn(max_steps) if max_steps else []

    def act(scene: Scene, step: int) -> ActionSpec:
        return search(scene, models, config, np.random.default_rng(seeds[step]))[0]

    return episode_loop(initial, models.score_fn, act, config.threshold, max_steps)
