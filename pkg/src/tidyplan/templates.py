"""Pairwise spatial relations, arrangement templates, and tidy-scene synthesis.

A template names object slots (by category) and the relations a tidy
arrangement must satisfy.  Relation kinds are the eight 45-degree compass
sectors in the table frame (+x = right, +y = behind) plus "on"/"under" for
support contact.  Synthesis places slots along a spanning tree of the
relation graph, then rejection-samples jitter, category swaps, and centroid
shifts until the scene is valid and satisfies every relation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .categories import CATALOG
from .world import DEFAULT_WORKSPACE, ObjectInstance, Scene, Workspace, check_overlap, in_bounds

RELATION_KINDS = kernels.SECTOR_KINDS + ("on", "under")

# Unit offset direction (reference -> subject) for each planar kind.
_SECTOR_DIR = {
    kind: (math.cos(math.radians(45.0 * k)), math.sin(math.radians(45.0 * k)))
    for k, kind in enumerate(kernels.SECTOR_KINDS)
}

_OPPOSITE = {kernels.SECTOR_KINDS[k]: kernels.SECTOR_KINDS[(k + 4) % 8] for k in range(8)}
_OPPOSITE["on"] = "under"
_OPPOSITE["under"] = "on"


@dataclass(frozen=True)
class Relation:
    kind: str
    subject_slot: int
    reference_slot: int

    def __post_init__(self):
        if self.kind not in RELATION_KINDS:
            raise ValueError(f"unknown relation kind {self.kind!r}")
        if self.subject_slot == self.reference_slot:
            raise ValueError("relation needs two distinct slots")


@dataclass(frozen=True)
class Slot:
    slot: int
    category: str
    alternates: tuple[str, ...] = ()

    def __post_init__(self):
        for c in (self.category, *self.alternates):
            if c not in CATALOG:
                raise ValueError(f"unknown category {c!r}")

    def choices(self) -> tuple[str, ...]:
        return (self.category, *self.alternates)


@dataclass(frozen=True)
class Template:
    id: str
    environment_tag: str
    slots: tuple[Slot, ...]
    relations: tuple[Relation, ...]

    def __post_init__(self):
        if not (2 <= len(self.slots) <= 9):
            raise ValueError("template needs 2 to 9 slots")
        indices = {s.slot for s in self.slots}
        if len(indices) != len(self.slots):
            raise ValueError("duplicate slot indices")
        if not self.relations:
            raise ValueError("template needs at least one relation")
        for rel in self.relations:
            if rel.subject_slot not in indices or rel.reference_slot not in indices:
                raise ValueError("relation references undeclared slot")
            # Support-contact relations are unsatisfiable unless the lower
            # object's category (all swaps included) is a support surface.
            if rel.kind == "on":
                self._require_support(rel.reference_slot)
            elif rel.kind == "under":
                self._require_support(rel.subject_slot)
        # Connected relation graph: every slot placeable relative to another.
        adj = {i: set() for i in indices}
        for rel in self.relations:
            adj[rel.subject_slot].add(rel.reference_slot)
            adj[rel.reference_slot].add(rel.subject_slot)
        seen = set()
        stack = [next(iter(indices))]
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(adj[v] - seen)
        if seen != indices:
            raise ValueError("relation graph must be connected")

    def _require_support(self, slot_idx: int) -> None:
        s = next(s for s in self.slots if s.slot == slot_idx)
        if not all(CATALOG[c].is_support for c in s.choices()):
            raise ValueError(f"slot {slot_idx} must be a support category for on/under")

    def slot_map(self) -> dict[int, Slot]:
        return {s.slot: s for s in self.slots}


def classify_relation(reference: ObjectInstance, subject: ObjectInstance) -> str:
    """Relation kind of `subject` relative to `reference`."""
    poses = np.array([reference.pose, subject.pose], dtype=np.float64)
    half = np.array([reference.half_extents, subject.half_extents], dtype=np.float64)
    support = np.array([reference.is_support, subject.is_support], dtype=np.uint8)
    label = kernels.pair_label(poses, half, support, 0, 1)
    if label < 0:
        raise ValueError("degenerate offset")
    return RELATION_KINDS[label]


def satisfies_template(
    scene: Scene, template: Template, binding: dict[int, int]
) -> tuple[bool, list[Relation]]:
    """Check every relation under a slot->object-id binding."""
    missing = [s.slot for s in template.slots if s.slot not in binding]
    if missing:
        raise ValueError("incomplete binding")
    violated = []
    for rel in template.relations:
        ref = scene.object_by_id(binding[rel.reference_slot])
        subj = scene.object_by_id(binding[rel.subject_slot])
        if classify_relation(ref, subj) != rel.kind:
            violated.append(rel)
    return (not violated, violated)


@dataclass(frozen=True)
class AugmentSpec:
    """Synthesis variation: gap in meters is nominal_gap * (1 +- gap_jitter)."""

    nominal_gap: float = 0.03
    gap_jitter: float = 0.3
    p_swap: float = 0.3
    centroid_span: float = 0.6

    @property
    def gap_min(self) -> float:
        return self.nominal_gap * (1.0 - self.gap_jitter)

    @property
    def gap_max(self) -> float:
        return self.nominal_gap * (1.0 + self.gap_jitter)


DEFAULT_AUGMENT = AugmentSpec()


def _extent_along(half: tuple[float, float], dx: float, dy: float) -> float:
    # Axis-aligned rectangle's support-function extent along (dx, dy).
    return half[0] * abs(dx) + half[1] * abs(dy)


def _spanning_order(template: Template) -> list[tuple[int, Relation | None]]:
    """BFS placement order: (slot, relation linking it to an already-placed slot)."""
    adj: dict[int, list[Relation]] = {s.slot: [] for s in template.slots}
    for rel in template.relations:
        adj[rel.subject_slot].append(rel)
        adj[rel.reference_slot].append(rel)
    root = max(adj, key=lambda i: (len(adj[i]), -i))
    order: list[tuple[int, Relation | None]] = [(root, None)]
    placed = {root}
    queue = [root]
    while queue:
        u = queue.pop(0)
        for rel in adj[u]:
            v = rel.subject_slot + rel.reference_slot - u
            if v not in placed:
                placed.add(v)
                order.append((v, rel))
                queue.append(v)
    return order


def sample_tidied_scene(
    template: Template,
    rng_seed: int,
    augment: AugmentSpec = DEFAULT_AUGMENT,
    workspace: Workspace = DEFAULT_WORKSPACE,
    max_retries: int = 100,
) -> Scene:
    """Synthesize a valid scene satisfying the template; deterministic per seed."""
    rng = np.random.default_rng(rng_seed)
    order = _spanning_order(template)
    for _ in range(max_retries):
        cats = {}
        for s in template.slots:
            if s.alternates and rng.random() < augment.p_swap:
                cats[s.slot] = s.alternates[int(rng.integers(len(s.alternates)))]
            else:
                cats[s.slot] = s.category
        pos: dict[int, tuple[float, float]] = {}
        for slot_idx, rel in order:
            if rel is None:
                pos[slot_idx] = (0.0, 0.0)
                continue
            as_subject = rel.subject_slot == slot_idx
            anchor = rel.reference_slot if as_subject else rel.subject_slot
            kind = rel.kind if as_subject else _OPPOSITE[rel.kind]
            ax, ay = pos[anchor]
            h_new = CATALOG[cats[slot_idx]].half_extents
            h_anchor = CATALOG[cats[anchor]].half_extents
            if kind == "on":
                # New object's center jittered but kept inside the anchor.
                pos[slot_idx] = (
                    ax + float(rng.uniform(-0.3, 0.3)) * h_anchor[0],
                    ay + float(rng.uniform(-0.3, 0.3)) * h_anchor[1],
                )
            elif kind == "under":
                # New object is the surface; anchor center must land inside it.
                pos[slot_idx] = (
                    ax + float(rng.uniform(-0.3, 0.3)) * h_new[0],
                    ay + float(rng.uniform(-0.3, 0.3)) * h_new[1],
                )
            else:
                dx, dy = _SECTOR_DIR[kind]
                gap = float(rng.uniform(augment.gap_min, augment.gap_max))
                dist = _extent_along(h_anchor, dx, dy) + _extent_along(h_new, dx, dy) + gap
                # Perpendicular wobble small enough to stay inside the sector.
                wobble = float(rng.uniform(-0.1, 0.1)) * dist
                pos[slot_idx] = (ax + dx * dist - dy * wobble, ay + dy * dist + dx * wobble)
        xs = np.array([pos[s.slot][0] for s in template.slots])
        ys = np.array([pos[s.slot][1] for s in template.slots])
        lo_x = 0.5 * (1.0 - augment.centroid_span) * workspace.width_m
        lo_y = 0.5 * (1.0 - augment.centroid_span) * workspace.depth_m
        cx = float(rng.uniform(lo_x, workspace.width_m - lo_x))
        cy = float(rng.uniform(lo_y, workspace.depth_m - lo_y))
        shift_x, shift_y = cx - float(xs.mean()), cy - float(ys.mean())
        objects = tuple(
            ObjectInstance(
                id=s.slot,
                category=cats[s.slot],
                half_extents=CATALOG[cats[s.slot]].half_extents,
                pose=(pos[s.slot][0] + shift_x, pos[s.slot][1] + shift_y, 0.0),
                is_support=CATALOG[cats[s.slot]].is_support,
            )
            for s in template.slots
        )
        scene = Scene(workspace=workspace, objects=objects, environment_tag=template.environment_tag)
        if check_overlap(scene) or in_bounds(scene):
            continue
        ok, _ = satisfies_template(scene, template, {s.slot: s.slot for s in template.slots})
        if ok:
            return scene
    raise ValueError("template infeasible in workspace")


# ---------------------------------------------------------------------------
# Template files

def template_from_dict(d: dict) -> Template:
    return Template(
        id=str(d["id"]),
        environment_tag=str(d["environment_tag"]),
        slots=tuple(
            Slot(
                slot=int(s["slot"]),
                category=str(s["category"]),
                alternates=tuple(s.get("alternates", ())),
            )
            for s in d["slots"]
        ),
        relations=tuple(
            Relation(
                kind=str(r["kind"]),
                subject_slot=int(r["subject"]),
                reference_slot=int(r["reference"]),
            )
            for r in d["relations"]
        ),
    )


def template_to_dict(t: Template) -> dict:
    return {
        "id": t.id,
        "environment_tag": t.environment_tag,
        "slots": [
            {"slot": s.slot, "category": s.category, "alternates": list(s.alternates)}
            for s in t.slots
        ],
        "relations": [
            {"kind": r.kind, "subject": r.subject_slot, "reference": r.reference_slot}
            for r in t.relations
        ],
    }


TEMPLATE_DIR = Path(__file__).parent / "data" / "templates"


def load_template_file(path: str | Path) -> Template:
    return template_from_dict(json.loads(Path(path).read_text()))


def load_library(directory: str | Path = TEMPLATE_DIR) -> list[Template]:
    """All templates shipped with the package, in filename order."""
    files = sorted(Path(directory).glob("*.json"))
    lib = [load_template_file(f) for f in files]
    ids = [t.id for t in lib]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate template ids in library")
    return lib
