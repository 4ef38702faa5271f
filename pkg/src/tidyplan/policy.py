"""Tidying policy trained with implicit Q-learning on the offline transitions.

Per object the policy head maps (scene-minus-object features, object
descriptor) to one logit per (cell x, cell y, rotation bin); the action
distribution is a softmax over all N*W*H*R entries jointly, with infeasible
placements masked out at inference time.  Q consumes the same per-object
features plus a normalized placement encoding; V consumes scene features
only, so the expectile target pushes it toward an upper expectile of Q over
the actions taken in the data.

Angle entries are scaled by 1/360 immediately before every network forward
pass (training and inference alike); feature vectors themselves keep raw
degrees.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels, nn
from .categories import N_CATEGORIES, category_index
from .datagen import RLRecord
from .discriminator import FEATURE_DIM, featurize
from .world import ActionSpec, Scene

POLICY_FEATURE_DIM = FEATURE_DIM + N_CATEGORIES + 2 + 3
Q_FEATURE_DIM = POLICY_FEATURE_DIM + 3

# 1/360 on the descriptor's theta entry (and nowhere else)
_POLICY_SCALE = np.ones(POLICY_FEATURE_DIM)
_POLICY_SCALE[-1] = 1.0 / 360.0
_Q_SCALE = np.ones(Q_FEATURE_DIM)
_Q_SCALE[POLICY_FEATURE_DIM - 1] = 1.0 / 360.0


def policy_features(scene: Scene, object_id: int) -> np.ndarray:
    """Scene-minus-object statistics concatenated with the object descriptor."""
    obj = scene.object_by_id(object_id)
    p = scene.packed
    row = p.row_of[object_id]
    keep = np.arange(len(scene.objects)) != row
    ws = scene.workspace
    rest = kernels.feature_vector(
        np.ascontiguousarray(p.poses[keep]),
        np.ascontiguousarray(p.half[keep]),
        np.ascontiguousarray(p.cats[keep]),
        np.ascontiguousarray(p.support[keep]),
        ws.width_m,
        ws.depth_m,
        N_CATEGORIES,
    )
    desc = np.zeros(N_CATEGORIES + 5)
    desc[category_index(obj.category)] = 1.0
    desc[N_CATEGORIES : N_CATEGORIES + 2] = obj.half_extents
    desc[N_CATEGORIES + 2 :] = obj.pose
    return np.concatenate([rest, desc])


def _policy_feature_rows(scene: Scene) -> np.ndarray:
    # batched equivalent of stacking policy_features over every object
    p = scene.packed
    ws = scene.workspace
    n = len(p.ids)
    rows = np.empty((n, POLICY_FEATURE_DIM))
    rows[:, :FEATURE_DIM] = kernels.feature_rows(
        p.poses, p.half, p.cats, p.support, ws.width_m, ws.depth_m, N_CATEGORIES
    )
    desc = rows[:, FEATURE_DIM:]
    desc[:] = 0.0
    desc[np.arange(n), p.cats] = 1.0
    desc[:, N_CATEGORIES : N_CATEGORIES + 2] = p.half
    desc[:, N_CATEGORIES + 2 :] = p.poses
    return rows


def policy_logits(params: nn.NetParams, feature_rows: np.ndarray) -> np.ndarray:
    return nn.forward(params, feature_rows * _POLICY_SCALE)


def q_values(params: nn.NetParams, q_rows: np.ndarray) -> np.ndarray:
    return nn.forward(params, q_rows * _Q_SCALE)[:, 0]


def v_values(params: nn.NetParams, feature_rows: np.ndarray) -> np.ndarray:
    return nn.forward(params, feature_rows)[:, 0]


def placement_encoding(ws, cell: tuple[int, int], rotation_bin: int) -> np.ndarray:
    """Cell center in unit workspace coordinates plus fractional rotation."""
    return np.array(
        [
            (cell[0] + 0.5) / ws.grid_w,
            (cell[1] + 0.5) / ws.grid_h,
            rotation_bin / ws.rotation_bins,
        ]
    )


@dataclass(frozen=True)
class PolicyDistribution:
    object_ids: np.ndarray  # (N,) packed order
    logits: np.ndarray  # (N, grid_w, grid_h, R)
    mask: np.ndarray  # same shape, True = feasible
    probs: np.ndarray  # masked joint softmax, zeros at masked entries

    def action_at(self, flat_index: int) -> ActionSpec:
        n, xi, yi, r = np.unravel_index(flat_index, self.logits.shape)
        return ActionSpec(object_id=int(self.object_ids[n]), cell=(int(xi), int(yi)), rotation_bin=int(r))


def policy_distribution(params: nn.NetParams, scene: Scene) -> PolicyDistribution:
    ws = scene.workspace
    p = scene.packed
    rows = _policy_feature_rows(scene)
    logits = policy_logits(params, rows).reshape(
        len(scene.objects), ws.grid_w, ws.grid_h, ws.rotation_bins
    )
    mask = kernels.placement_mask(
        p.poses, p.half, p.support, ws.width_m, ws.depth_m, ws.grid_h, ws.grid_w, ws.rotation_bins
    )
    if not mask.any():
        raise ValueError("no feasible action")
    flat = logits[mask]
    e = np.exp(flat - flat.max())
    probs = np.zeros_like(logits)
    probs[mask] = e / e.sum()
    return PolicyDistribution(object_ids=p.ids.copy(), logits=logits, mask=mask, probs=probs)


def sample_action(dist: PolicyDistribution, rng_seed) -> ActionSpec:
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    flat = dist.probs.ravel()
    idx = int(rng.choice(flat.size, p=flat))
    return dist.action_at(idx)


def _unmasked_cdf(params: nn.NetParams, scene: Scene) -> np.ndarray:
    flat = policy_logits(params, _policy_feature_rows(scene)).ravel()
    e = np.exp(flat - flat.max())
    return np.cumsum(e / e.sum())


def _lazy_draw(
    cdf: np.ndarray, params: nn.NetParams, scene: Scene, rng: np.random.Generator, max_tries: int
) -> ActionSpec:
    """Rejection draw against the unmasked softmax cdf; accepted draws follow
    exactly the masked distribution.  The dense fallback also detects the
    fully-masked case."""
    ws = scene.workspace
    p = scene.packed
    shape = (len(scene.objects), ws.grid_w, ws.grid_h, ws.rotation_bins)
    for _ in range(max_tries):
        idx = min(int(np.searchsorted(cdf, rng.random(), side="right")), cdf.size - 1)
        n, xi, yi, r = np.unravel_index(idx, shape)
        x, y = ws.cell_center(int(xi), int(yi))
        theta = ws.bin_angle(int(r))
        if kernels.placement_feasible(
            p.poses, p.half, p.support, int(n), x, y, theta, ws.width_m, ws.depth_m
        ):
            return ActionSpec(object_id=int(p.ids[n]), cell=(int(xi), int(yi)), rotation_bin=int(r))
    dist = policy_distribution(params, scene)
    return sample_action(dist, rng)


def sample_action_lazy(
    params: nn.NetParams, scene: Scene, rng: np.random.Generator, max_tries: int = 64
) -> ActionSpec:
    """Draw from the masked joint softmax without building the full mask."""
    return _lazy_draw(_unmasked_cdf(params, scene), params, scene, rng, max_tries)


class ProposalSampler:
    """Callable sampler that memoizes per-scene distributions.

    Tree expansion rejection-resamples the same scene many times over; the
    cdf is scene-deterministic, so caching it changes nothing but the cost.
    Keyed by object identity with the scene kept referenced, bounded FIFO.
    """

    def __init__(self, params: nn.NetParams, capacity: int = 256, max_tries: int = 64):
        self.params = params
        self.capacity = capacity
        self.max_tries = max_tries
        self._memo: dict[int, tuple[Scene, np.ndarray]] = {}

    def __call__(self, scene: Scene, rng: np.random.Generator) -> ActionSpec:
        key = id(scene)
        hit = self._memo.get(key)
        if hit is None or hit[0] is not scene:
            if len(self._memo) >= self.capacity:
                self._memo.pop(next(iter(self._memo)))
            hit = (scene, _unmasked_cdf(self.params, scene))
            self._memo[key] = hit
        return _lazy_draw(hit[1], self.params, scene, rng, self.max_tries)


# ---------------------------------------------------------------------------
# IQL training

@dataclass(frozen=True)
class IQLConfig:
    tau: float = 0.7
    beta: float = 3.0  # inverse temperature; no published value exists
    gamma: float = 0.95  # discount; no published value exists
    polyak: float = 0.005
    lr: float = 1e-3
    batch_size: int = 64
    steps: int = 3000
    weight_clip: float = 100.0
    hidden: tuple[int, ...] = (128, 64)
    seed: int = 0


@dataclass
class IQLLog:
    v_loss: list[float] = field(default_factory=list)
    q_loss: list[float] = field(default_factory=list)
    pi_loss: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class _Prepared:
    """Flat training arrays; one policy-row block per transition."""

    v_feats: np.ndarray  # (B, F) featurize(state)
    v_feats_next: np.ndarray  # (B, F)
    q_rows: np.ndarray  # (B, Qdim)
    rewards: np.ndarray  # (B,)
    terminal: np.ndarray  # (B,) bool
    pi_rows: np.ndarray  # (M, Pdim) concatenated per-object rows
    pi_offsets: np.ndarray  # (B+1,) row offsets per transition
    pi_lengths: np.ndarray  # (B,) object counts
    pi_index: np.ndarray  # (B,) chosen flat index within the block
    logits_per_row: int


def prepare_transitions(records: list[RLRecord], split: str = "train") -> _Prepared:
    chosen = [r.transition for r in records if r.split == split]
    if not chosen:
        raise ValueError("dataset nonempty required")
    B = len(chosen)
    ws = chosen[0].state.workspace
    per_row = ws.grid_w * ws.grid_h * ws.rotation_bins
    v_feats = np.empty((B, FEATURE_DIM))
    v_next = np.empty((B, FEATURE_DIM))
    q_rows = np.empty((B, Q_FEATURE_DIM))
    rewards = np.empty(B)
    terminal = np.zeros(B, dtype=bool)
    blocks = []
    lengths = np.empty(B, dtype=np.int64)
    index = np.empty(B, dtype=np.int64)
    for k, tr in enumerate(chosen):
        s = tr.state
        v_feats[k] = featurize(s)
        v_next[k] = featurize(tr.next_state)
        rows = _policy_feature_rows(s)
        blocks.append(rows)
        lengths[k] = rows.shape[0]
        n = s.packed.row_of[tr.action.object_id]
        xi, yi = tr.action.cell
        index[k] = (
            n * per_row
            + (xi * s.workspace.grid_h + yi) * s.workspace.rotation_bins
            + tr.action.rotation_bin
        )
        q_rows[k, :POLICY_FEATURE_DIM] = rows[n]
        q_rows[k, POLICY_FEATURE_DIM:] = placement_encoding(ws, tr.action.cell, tr.action.rotation_bin)
        rewards[k] = tr.reward
        terminal[k] = tr.terminal
    offsets = np.zeros(B + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    return _Prepared(
        v_feats=v_feats,
        v_feats_next=v_next,
        q_rows=q_rows,
        rewards=rewards,
        terminal=terminal,
        pi_rows=np.concatenate(blocks, axis=0),
        pi_offsets=offsets,
        pi_lengths=lengths,
        pi_index=index,
        logits_per_row=per_row,
    )


def train_iql(
    records: list[RLRecord], config: IQLConfig = IQLConfig(), prepared: _Prepared | None = None
) -> tuple[nn.NetParams, nn.NetParams, nn.NetParams, IQLLog]:
    """Returns (Q, V, policy) parameters; deterministic per config.seed."""
    data = prepared if prepared is not None else prepare_transitions(records)
    B = len(data.rewards)
    rng = np.random.default_rng(config.seed)
    acts = ("relu",) * len(config.hidden)
    q = nn.init_params((Q_FEATURE_DIM, *config.hidden, 1), acts + ("identity",), rng)
    v = nn.init_params((FEATURE_DIM, *config.hidden, 1), acts + ("identity",), rng)
    pi = nn.init_params(
        (POLICY_FEATURE_DIM, *config.hidden, data.logits_per_row), acts + ("identity",), rng
    )
    q_target = q
    st_q, st_v, st_pi = nn.init_adam(q), nn.init_adam(v), nn.init_adam(pi)
    log = IQLLog()
    scaled_v = data.v_feats
    scaled_vn = data.v_feats_next
    for step in range(config.steps):
        idx = rng.choice(B, size=min(config.batch_size, B), replace=False)
        q_hat = q_values(q_target, data.q_rows[idx])
        v_now = v_values(v, scaled_v[idx])
        # value step: expectile regression toward target-Q
        gv = nn.gradients(v, "expectile", {"x": scaled_v[idx], "y": q_hat[:, None], "tau": config.tau})
        v, st_v = nn.adam_step(v, gv, st_v, config.lr)
        # Q step: one-step TD with V bootstrapping, zeroed at terminals
        v_next = v_values(v, scaled_vn[idx])
        td_target = data.rewards[idx] + config.gamma * np.where(data.terminal[idx], 0.0, v_next)
        gq = nn.gradients(q, "mse", {"x": data.q_rows[idx] * _Q_SCALE, "y": td_target[:, None]})
        q, st_q = nn.adam_step(q, gq, st_q, config.lr)
        # policy step: advantage-weighted NLL over each scene's joint softmax
        w = np.minimum(np.exp(config.beta * (q_hat - v_now)), config.weight_clip)
        rows = np.concatenate(
            [data.pi_rows[data.pi_offsets[k] : data.pi_offsets[k + 1]] for k in idx]
        )
        gpi_batch = {
            "x": rows * _POLICY_SCALE,
            "lengths": data.pi_lengths[idx],
            "index": data.pi_index[idx],
            "weight": w,
        }
        gpi = nn.gradients(pi, "awr_nll", gpi_batch)
        pi, st_pi = nn.adam_step(pi, gpi, st_pi, config.lr)
        q_target = nn.polyak_update(q_target, q, config.polyak)
        if step % 50 == 0 or step == config.steps - 1:
            lv = nn.loss_value(v, "expectile", {"x": scaled_v[idx], "y": q_hat[:, None], "tau": config.tau})
            lq = nn.loss_value(q, "mse", {"x": data.q_rows[idx] * _Q_SCALE, "y": td_target[:, None]})
            lp = nn.loss_value(pi, "awr_nll", gpi_batch)
            if not (np.isfinite(lv) and np.isfinite(lq) and np.isfinite(lp)):
                raise ValueError(f"divergence at step {step}")
            log.v_loss.append(lv)
            log.q_loss.append(lq)
            log.pi_loss.append(lp)
    return q, v, pi, log
