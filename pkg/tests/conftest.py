"""Shared fixtures: tiny scenes, a pruned template library, and small trained
models reused across the policy/search tests."""

from __future__ import annotations

import numpy as np
import pytest

from tidyplan.datagen import build_dataset
from tidyplan.discriminator import DiscConfig, train_discriminator
from tidyplan.policy import IQLConfig, train_iql
from tidyplan.templates import load_library
from tidyplan.world import ObjectInstance, Scene, Workspace


def square(obj_id: int, x: float, y: float, theta: float = 0.0, half: float = 0.05,
           category: str = "cup", support: bool = False) -> ObjectInstance:
    return ObjectInstance(
        id=obj_id,
        category=category,
        half_extents=(half, half),
        pose=(x, y, theta),
        is_support=support,
    )


@pytest.fixture(scope="session")
def library():
    return load_library()


@pytest.fixture(scope="session")
def small_dataset(library):
    disc, rl, report = build_dataset(library[:10], trajectories_per_template=20, T=5, seed=0)
    return disc, rl, report


@pytest.fixture(scope="session")
def small_models(small_dataset):
    disc_records, rl_records, _ = small_dataset
    disc, _ = train_discriminator(disc_records, DiscConfig(epochs=15, seed=0))
    q, v, pi, _ = train_iql(rl_records, IQLConfig(steps=600, seed=0))
    return disc, q, v, pi


@pytest.fixture
def basic_scene():
    ws = Workspace(width_m=1.0, depth_m=0.7, grid_h=16, grid_w=16, rotation_bins=4)
    objects = (
        square(1, 0.30, 0.35),
        square(2, 0.70, 0.35),
        square(3, 0.50, 0.20, theta=45.0),
    )
    return Scene(workspace=ws, objects=objects, environment_tag="dining")


def random_scene(rng: np.random.Generator, n_objects: int | None = None) -> Scene:
    """Unconstrained scene for property tests; overlap and bounds may be violated."""
    ws = Workspace(width_m=1.0, depth_m=0.7, grid_h=16, grid_w=16, rotation_bins=4)
    n = int(rng.integers(1, 7)) if n_objects is None else n_objects
    cats = ("cup", "plate", "fork", "book", "mug", "soap")
    objects = tuple(
        ObjectInstance(
            id=i + 1,
            category=cats[int(rng.integers(len(cats)))],
            half_extents=(float(rng.uniform(0.01, 0.09)), float(rng.uniform(0.01, 0.09))),
            pose=(
                float(rng.uniform(0.05, 0.95)),
                float(rng.uniform(0.05, 0.65)),
                float(rng.uniform(0.0, 360.0)) % 360.0,
            ),
            is_support=bool(rng.random() < 0.25),
        )
        for i in range(n)
    )
    return Scene(workspace=ws, objects=objects, environment_tag="mixed")
