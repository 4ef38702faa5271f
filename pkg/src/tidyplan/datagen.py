"""Synthetic training data: untidying trajectories, score labels, RL transitions.

A trajectory starts from a synthesized tidy scene and scatters one object at
a time to random valid poses; the reversed sequence is a tidying
demonstration.  Step t of T gets label (t-1)/(T-1), so the scattered end is
0 and the tidy end is 1.  Transitions carry a sparse reward: 1 on the final
(terminal) step only.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import kernels
from .templates import AugmentSpec, DEFAULT_AUGMENT, Template, sample_tidied_scene
from .world import (
    ActionSpec,
    DEFAULT_WORKSPACE,
    Scene,
    Workspace,
    action_from_dict,
    action_to_dict,
    scene_from_dict,
    scene_to_dict,
)


@dataclass(frozen=True)
class Trajectory:
    steps: tuple[tuple[Scene, float], ...]
    template_id: str
    seed: int

    def __post_init__(self):
        T = len(self.steps)
        if T < 2:
            raise ValueError("trajectory needs at least two steps")
        for t, (_, label) in enumerate(self.steps):
            expect = t / (T - 1)
            if not math.isclose(label, expect, rel_tol=0.0, abs_tol=1e-15):
                raise ValueError("labels must increase in equal increments from 0 to 1")


@dataclass(frozen=True)
class RLTransition:
    state: Scene
    action: ActionSpec
    next_state: Scene
    reward: int
    terminal: bool

    def __post_init__(self):
        if (self.reward == 1) != self.terminal:
            raise ValueError("reward must be 1 exactly on terminal transitions")


def _scatter_one(scene: Scene, rng: np.random.Generator, max_tries: int = 100) -> Scene:
    """Move one uniformly chosen object to a random valid continuous pose.

    Each try redraws both the object and the pose; crowded scenes can leave a
    particular object with almost no room while others still move freely.
    """
    ws = scene.workspace
    n = len(scene.objects)
    p = scene.packed
    for _ in range(max_tries):
        pick = int(rng.integers(n))
        row = p.row_of[scene.objects[pick].id]
        x = float(rng.uniform(0.0, ws.width_m))
        y = float(rng.uniform(0.0, ws.depth_m))
        theta = float(rng.uniform(0.0, 360.0))
        if kernels.placement_feasible(p.poses, p.half, p.support, row, x, y, theta, ws.width_m, ws.depth_m):
            objects = tuple(
                replace(o, pose=(x, y, theta)) if k == pick else o
                for k, o in enumerate(scene.objects)
            )
            return replace(scene, objects=objects)
    raise ValueError("scatter failed")


def generate_trajectory(
    template: Template,
    T: int,
    rng_seed: int,
    augment: AugmentSpec = DEFAULT_AUGMENT,
    workspace: Workspace = DEFAULT_WORKSPACE,
) -> Trajectory:
    """Tidy scene plus T-1 scatter steps, reversed into a tidying sequence."""
    if T < 2:
        raise ValueError("trajectory needs at least two steps")
    rng = np.random.default_rng(rng_seed)
    tidy_seed = int(rng.integers(2**32))
    states = [sample_tidied_scene(template, tidy_seed, augment, workspace)]
    for _ in range(T - 1):
        states.append(_scatter_one(states[-1], rng))
    states.reverse()
    steps = tuple((s, t / (T - 1)) for t, s in enumerate(states))
    return Trajectory(steps=steps, template_id=template.id, seed=rng_seed)


def to_rl_transitions(traj: Trajectory) -> list[RLTransition]:
    """One transition per adjacent pair; the action snaps the moved object's
    destination to its grid cell and rotation bin."""
    out = []
    T = len(traj.steps)
    for t in range(T - 1):
        scene, _ = traj.steps[t]
        nxt, _ = traj.steps[t + 1]
        ws = scene.workspace
        moved = [
            (a.id, b.pose)
            for a, b in zip(scene.objects, nxt.objects)
            if a.pose != b.pose
        ]
        if len(moved) != 1:
            raise ValueError("malformed trajectory")
        obj_id, (x, y, theta) = moved[0]
        action = ActionSpec(object_id=obj_id, cell=ws.cell_of(x, y), rotation_bin=ws.bin_of(theta))
        last = t == T - 2
        out.append(RLTransition(state=scene, action=action, next_state=nxt, reward=int(last), terminal=last))
    return out


# ---------------------------------------------------------------------------
# Dataset assembly

@dataclass(frozen=True)
class DiscRecord:
    scene: Scene
    label: float
    split: str


@dataclass(frozen=True)
class RLRecord:
    transition: RLTransition
    split: str


def split_templates(library: list[Template], seed: int, train_frac: float = 0.72) -> dict[str, str]:
    """Map template id -> split, holding out whole templates per environment."""
    by_env: dict[str, list[Template]] = {}
    for t in library:
        by_env.setdefault(t.environment_tag, []).append(t)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    assignment = {}
    for env in sorted(by_env):
        group = sorted(by_env[env], key=lambda t: t.id)
        if len(group) < 2:
            raise ValueError("cannot split")
        order = rng.permutation(len(group))
        n_train = min(len(group) - 1, max(1, round(train_frac * len(group))))
        for rank, idx in enumerate(order):
            assignment[group[idx].id] = "train" if rank < n_train else "validation"
    return assignment


def build_dataset(
    library: list[Template],
    trajectories_per_template: int,
    T: int,
    seed: int,
    augment: AugmentSpec = DEFAULT_AUGMENT,
    workspace: Workspace = DEFAULT_WORKSPACE,
) -> tuple[list[DiscRecord], list[RLRecord], dict]:
    if not library:
        raise ValueError("library nonempty required")
    assignment = split_templates(library, seed)
    disc: list[DiscRecord] = []
    rl: list[RLRecord] = []
    per_env: dict[str, dict] = {}
    for ti, template in enumerate(sorted(library, key=lambda t: t.id)):
        split = assignment[template.id]
        env = template.environment_tag
        stats = per_env.setdefault(env, {"categories": set(), "templates": 0, "trajectories": 0, "data": 0})
        stats["templates"] += 1
        for s in template.slots:
            stats["categories"].update(s.choices())
        for k in range(trajectories_per_template):
            traj_seed = int(np.random.SeedSequence(seed, spawn_key=(1, ti, k)).generate_state(1)[0])
            traj = generate_trajectory(template, T, traj_seed, augment, workspace)
            stats["trajectories"] += 1
            stats["data"] += len(traj.steps)
            disc.extend(DiscRecord(scene=s, label=lbl, split=split) for s, lbl in traj.steps)
            rl.extend(RLRecord(transition=tr, split=split) for tr in to_rl_transitions(traj))
    report = {
        "seed": seed,
        "T": T,
        "trajectories_per_template": trajectories_per_template,
        "splits": {
            "train": sorted(tid for tid, s in assignment.items() if s == "train"),
            "validation": sorted(tid for tid, s in assignment.items() if s == "validation"),
        },
        "environments": {
            env: {
                "objects": len(st["categories"]),
                "templates": st["templates"],
                "trajectories": st["trajectories"],
                "data": st["data"],
            }
            for env, st in sorted(per_env.items())
        },
        "totals": {
            "disc_records": len(disc),
            "rl_records": len(rl),
        },
    }
    return disc, rl, report


# ---------------------------------------------------------------------------
# Newline-delimited JSON files

def write_disc_ndjson(records: list[DiscRecord], path: str | Path) -> None:
    with open(path, "w") as f:
        for r in records:
            f.write(json.dumps({"scene": scene_to_dict(r.scene), "label": r.label, "split": r.split}) + "\n")


def read_disc_ndjson(path: str | Path) -> list[DiscRecord]:
    out = []
    with open(path) as f:
        for line in f:
            d = json.loads(line)
            out.append(DiscRecord(scene=scene_from_dict(d["scene"]), label=float(d["label"]), split=d["split"]))
    return out


def write_rl_ndjson(records: list[RLRecord], path: str | Path) -> None:
    with open(path, "w") as f:
        for r in records:
            tr = r.transition
            f.write(
                json.dumps(
                    {
                        "state": scene_to_dict(tr.state),
                        "action": action_to_dict(tr.action),
                        "next_state": scene_to_dict(tr.next_state),
                        "reward": tr.reward,
                        "terminal": tr.terminal,
                        "split": r.split,
                    }
                )
                + "\n"
            )


def read_rl_ndjson(path: str | Path) -> list[RLRecord]:
    out = []
    with open(path) as f:
        for line in f:
            d = json.loads(line)
            out.append(
                RLRecord(
                    transition=RLTransition(
                        state=scene_from_dict(d["state"]),
                        action=action_from_dict(d["action"]),
                        next_state=scene_from_dict(d["next_state"]),
                        reward=int(d["reward"]),
                        terminal=bool(d["terminal"]),
                    ),
                    split=d["split"],
                )
            )
    return out


def format_stats_table(report: dict) -> str:
    """Per-environment counts in a four-column layout."""
    rows = [("environment", "objects", "templates", "trajectories", "data")]
    totals = [0, 0, 0, 0]
    for env, st in report["environments"].items():
        rows.append((env, str(st["objects"]), str(st["templates"]), str(st["trajectories"]), str(st["data"])))
        for i, key in enumerate(("objects", "templates", "trajectories", "data")):
            totals[i] += st[key]
    rows.append(("total", str(totals[0]), str(totals[1]), str(totals[2]), str(totals[3])))
    widths = [max(len(r[c]) for r in rows) for c in range(5)]
    return "\n".join("  ".join(val.ljust(w) for val, w in zip(row, widths)).rstrip() for row in rows)
