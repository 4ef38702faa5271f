"""Scenes, objects, the bounded workspace, and the deterministic transition model.

All types are immutable values; operations are pure functions.  Poses are
continuous (x, y in meters, theta in degrees [0, 360)); actions snap to
grid-cell centers and rotation-bin angles.  Rotation bin r places at
r*360/R degrees and covers [r*360/R, (r+1)*360/R), so R = 4 gives the four
axis-aligned placements.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from . import kernels
from .categories import CATALOG, ENV_TAGS, category_index


@dataclass(frozen=True)
class Workspace:
    width_m: float
    depth_m: float
    grid_h: int
    grid_w: int
    rotation_bins: int

    def __post_init__(self):
        if not (self.width_m > 0 and self.depth_m > 0):
            raise ValueError("workspace dimensions must be positive")
        if self.grid_h < 2 or self.grid_w < 2:
            raise ValueError("grid must be at least 2x2")
        if self.rotation_bins < 1:
            raise ValueError("need at least one rotation bin")

    def cell_center(self, x_idx: int, y_idx: int) -> tuple[float, float]:
        return (
            (x_idx + 0.5) * self.width_m / self.grid_w,
            (y_idx + 0.5) * self.depth_m / self.grid_h,
        )

    def bin_angle(self, rotation_bin: int) -> float:
        return rotation_bin * 360.0 / self.rotation_bins

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """Grid cell containing (x, y), clamped to the grid."""
        xi = min(max(int(x * self.grid_w / self.width_m), 0), self.grid_w - 1)
        yi = min(max(int(y * self.grid_h / self.depth_m), 0), self.grid_h - 1)
        return xi, yi

    def bin_of(self, theta: float) -> int:
        """Rotation bin covering angle theta (membership, not nearest)."""
        t = math.fmod(theta, 360.0)
        if t < 0.0:
            t += 360.0
        return min(int(t * self.rotation_bins / 360.0), self.rotation_bins - 1)

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width_m, self.depth_m)


DEFAULT_WORKSPACE = Workspace(width_m=1.0, depth_m=0.7, grid_h=16, grid_w=16, rotation_bins=4)


@dataclass(frozen=True)
class ObjectInstance:
    id: int
    category: str
    half_extents: tuple[float, float]
    pose: tuple[float, float, float]
    is_support: bool = False

    def __post_init__(self):
        hx, hy = self.half_extents
        if not (hx > 0 and hy > 0):
            raise ValueError("half_extents must be strictly positive")
        if not all(math.isfinite(v) for v in self.pose):
            raise ValueError("pose must be finite")
        if not (0.0 <= self.pose[2] < 360.0):
            raise ValueError("theta must lie in [0, 360)")


def normalize_angle(theta: float) -> float:
    t = math.fmod(theta, 360.0)
    return t + 360.0 if t < 0.0 else t


def make_object(obj_id: int, category: str, x: float, y: float, theta: float = 0.0) -> ObjectInstance:
    """Build an object with footprint and support flag from the catalog."""
    spec = CATALOG.get(category)
    if spec is None:
        raise ValueError(f"unknown category {category!r}")
    return ObjectInstance(
        id=obj_id,
        category=category,
        half_extents=spec.half_extents,
        pose=(x, y, normalize_angle(theta)),
        is_support=spec.is_support,
    )


class PackedScene:
    """Canonical array view of a scene (objects sorted by id)."""

    __slots__ = ("poses", "half", "cats", "support", "ids", "row_of")

    def __init__(self, objects):
        order = sorted(range(len(objects)), key=lambda k: objects[k].id)
        n = len(objects)
        self.poses = np.empty((n, 3), dtype=np.float64)
        self.half = np.empty((n, 2), dtype=np.float64)
        self.cats = np.empty(n, dtype=np.int64)
        self.support = np.empty(n, dtype=np.uint8)
        self.ids = np.empty(n, dtype=np.int64)
        self.row_of = {}
        for row, k in enumerate(order):
            o = objects[k]
            self.poses[row] = o.pose
            self.half[row] = o.half_extents
            self.cats[row] = category_index(o.category)
            self.support[row] = 1 if o.is_support else 0
            self.ids[row] = o.id
            self.row_of[o.id] = row


@dataclass(frozen=True)
class Scene:
    workspace: Workspace
    objects: tuple[ObjectInstance, ...]
    environment_tag: str

    def __post_init__(self):
        if len(self.objects) < 1:
            raise ValueError("scene needs at least one object")
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError("object ids must be unique")
        if self.environment_tag not in ENV_TAGS:
            raise ValueError(f"unknown environment_tag {self.environment_tag!r}")
        if not isinstance(self.objects, tuple):
            object.__setattr__(self, "objects", tuple(self.objects))

    @cached_property
    def packed(self) -> PackedScene:
        return PackedScene(self.objects)

    def object_by_id(self, obj_id: int) -> ObjectInstance:
        for o in self.objects:
            if o.id == obj_id:
                return o
        raise ValueError("no such object")


@dataclass(frozen=True)
class ActionSpec:
    object_id: int
    cell: tuple[int, int]  # (x_idx, y_idx)
    rotation_bin: int

    def sort_key(self) -> tuple[int, int, int, int]:
        return (self.object_id, self.cell[0], self.cell[1], self.rotation_bin)


def apply_action(scene: Scene, action: ActionSpec) -> Scene:
    """Re-pose one object to the action's cell center and bin angle."""
    ws = scene.workspace
    xi, yi = action.cell
    if not (0 <= xi < ws.grid_w and 0 <= yi < ws.grid_h):
        raise ValueError("action out of bounds")
    if not (0 <= action.rotation_bin < ws.rotation_bins):
        raise ValueError("action out of bounds")
    x, y = ws.cell_center(xi, yi)
    theta = ws.bin_angle(action.rotation_bin)
    found = False
    new_objects = []
    for o in scene.objects:
        if o.id == action.object_id:
            new_objects.append(replace(o, pose=(x, y, theta)))
            found = True
        else:
            new_objects.append(o)
    if not found:
        raise ValueError("no such object")
    return replace(scene, objects=tuple(new_objects))


def check_overlap(scene: Scene) -> list[tuple[int, int]]:
    """Unordered id pairs with illegal (positive-area, non-on/under) overlap."""
    p = scene.packed
    return [(int(p.ids[i]), int(p.ids[j])) for i, j in kernels.illegal_pairs(p.poses, p.half, p.support)]


def in_bounds(scene: Scene) -> list[int]:
    """Ids of objects whose footprint leaves the workspace rectangle."""
    p = scene.packed
    flags = kernels.oob_flags(p.poses, p.half, scene.workspace.width_m, scene.workspace.depth_m)
    return [int(p.ids[i]) for i in range(len(flags)) if flags[i]]


def scene_valid(scene: Scene) -> bool:
    return not check_overlap(scene) and not in_bounds(scene)


# ---------------------------------------------------------------------------
# JSON serialization

def workspace_to_dict(ws: Workspace) -> dict:
    return {
        "width_m": ws.width_m,
        "depth_m": ws.depth_m,
        "grid_h": ws.grid_h,
        "grid_w": ws.grid_w,
        "rotation_bins": ws.rotation_bins,
    }


def workspace_from_dict(d: dict) -> Workspace:
    return Workspace(
        width_m=float(d["width_m"]),
        depth_m=float(d["depth_m"]),
        grid_h=int(d["grid_h"]),
        grid_w=int(d["grid_w"]),
        rotation_bins=int(d["rotation_bins"]),
    )


def scene_to_dict(scene: Scene) -> dict:
    return {
        "workspace": workspace_to_dict(scene.workspace),
        "environment_tag": scene.environment_tag,
        "objects": [
            {
                "id": o.id,
                "category": o.category,
                "half_extents": list(o.half_extents),
                "pose": list(o.pose),
                "is_support": o.is_support,
            }
            for o in scene.objects
        ],
    }


def scene_from_dict(d: dict) -> Scene:
    objects = tuple(
        ObjectInstance(
            id=int(o["id"]),
            category=str(o["category"]),
            half_extents=(float(o["half_extents"][0]), float(o["half_extents"][1])),
            pose=(float(o["pose"][0]), float(o["pose"][1]), float(o["pose"][2])),
            is_support=bool(o["is_support"]),
        )
        for o in d["objects"]
    )
    return Scene(
        workspace=workspace_from_dict(d["workspace"]),
        objects=objects,
        environment_tag=str(d["environment_tag"]),
    )


def save_scene(scene: Scene, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=2) + "\n")


def load_scene(path: str | Path) -> Scene:
    return scene_from_dict(json.loads(Path(path).read_text()))


def action_to_dict(a: ActionSpec) -> dict:
    return {"object_id": a.object_id, "cell": list(a.cell), "rotation_bin": a.rotation_bin}


def action_from_dict(d: dict) -> ActionSpec:
    return ActionSpec(
        object_id=int(d["object_id"]),
        cell=(int(d["cell"][0]), int(d["cell"][1])),
        rotation_bin=int(d["rotation_bin"]),
    )
