"""Tabletop tidying: scene model, tidiness scoring, and search-based planning."""

__version__ = "0.1.0"

from .world import (  # noqa: F401
    ActionSpec,
    DEFAULT_WORKSPACE,
    ObjectInstance,
    Scene,
    Workspace,
    apply_action,
    check_overlap,
    in_bounds,
    load_scene,
    make_object,
    save_scene,
    scene_valid,
)
