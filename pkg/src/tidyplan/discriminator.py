"""Tidiness scorer: scene featurization plus a small sigmoid-headed regressor.

The feature vector is permutation invariant by construction (objects enter
through id-sorted packed arrays and order-free aggregates), so the score is
too.  Training minimizes squared error between the predicted score and the
trajectory-position label.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels, nn
from .categories import N_CATEGORIES
from .datagen import DiscRecord
from .world import Scene

FEATURE_DIM = kernels.N_BASE_FEATURES + N_CATEGORIES


def featurize(scene: Scene) -> np.ndarray:
    """Fixed-length permutation-invariant scene statistics."""
    if len(scene.objects) == 0:
        raise ValueError("no objects")
    p = scene.packed
    ws = scene.workspace
    return kernels.feature_vector(
        p.poses, p.half, p.cats, p.support, ws.width_m, ws.depth_m, N_CATEGORIES
    )


def _featurize_packed(poses, half, cats, support, workspace) -> np.ndarray:
    if poses.shape[0] == 0:
        raise ValueError("no objects")
    return kernels.feature_vector(
        poses, half, cats, support, workspace.width_m, workspace.depth_m, N_CATEGORIES
    )


def score(params: nn.NetParams, scene: Scene) -> float:
    return float(nn.forward(params, featurize(scene))[0])


def score_features(params: nn.NetParams, feats: np.ndarray) -> np.ndarray:
    """Batched scores from precomputed feature rows."""
    return nn.forward(params, feats)[:, 0]


@dataclass(frozen=True)
class DiscConfig:
    hidden: tuple[int, ...] = (128, 64)
    batch_size: int = 64
    lr: float = 1e-3
    epochs: int = 30
    seed: int = 0


@dataclass
class TrainLog:
    train_loss: list[float] = field(default_factory=list)
    validation_loss: list[float] = field(default_factory=list)


def _feature_matrix(records: list[DiscRecord]) -> tuple[np.ndarray, np.ndarray]:
    X = np.empty((len(records), FEATURE_DIM))
    y = np.empty((len(records), 1))
    for k, r in enumerate(records):
        X[k] = featurize(r.scene)
        y[k, 0] = r.label
    return X, y


def train_discriminator(records: list[DiscRecord], config: DiscConfig = DiscConfig()) -> tuple[nn.NetParams, TrainLog]:
    """Minibatch Adam on squared error; deterministic per config.seed."""
    train = [r for r in records if r.split == "train"]
    if not train:
        raise ValueError("train split nonempty required")
    val = [r for r in records if r.split == "validation"]
    Xtr, ytr = _feature_matrix(train)
    Xva, yva = _feature_matrix(val) if val else (None, None)
    rng = np.random.default_rng(config.seed)
    params = nn.init_params((FEATURE_DIM, *config.hidden, 1), ("relu",) * len(config.hidden) + ("sigmoid",), rng)
    state = nn.init_adam(params)
    log = TrainLog()
    n = len(train)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            batch = {"x": Xtr[idx], "y": ytr[idx]}
            grads = nn.gradients(params, "mse", batch)
            params, state = nn.adam_step(params, grads, state, config.lr)
        train_loss = nn.loss_value(params, "mse", {"x": Xtr, "y": ytr})
        if not np.isfinite(train_loss):
            raise ValueError("divergence")
        log.train_loss.append(train_loss)
        if Xva is not None:
            log.validation_loss.append(nn.loss_value(params, "mse", {"x": Xva, "y": yva}))
    return params, log


def threshold_sweep(params: nn.NetParams, records: list[DiscRecord], thresholds) -> list[dict]:
    """Precision/recall treating label-1 scenes as positives at each cutoff."""
    X, y = _feature_matrix(records)
    scores = score_features(params, X)
    positive = y[:, 0] == 1.0
    if not positive.any():
        raise ValueError("degenerate sweep")
    rows = []
    for xi in thresholds:
        pred = scores >= xi
        tp = int((pred & positive).sum())
        fp = int((pred & ~positive).sum())
        fn = int((~pred & positive).sum())
        rows.append(
            {
                "threshold": float(xi),
                "precision": tp / (tp + fp) if (tp + fp) > 0 else None,
                "recall": tp / (tp + fn),
            }
        )
    return rows
