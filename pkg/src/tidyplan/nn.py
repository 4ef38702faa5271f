"""Small feed-forward network toolkit: forward, exact gradients, Adam.

Everything is float64 and functional: params in, params out.  Three loss
tags cover the training objectives used elsewhere:

- "mse": mean over the batch of summed squared output error.
- "expectile": asymmetric squared error |tau - 1(u<0)| u^2 with u = y - yhat;
  tau = 0.5 recovers plain least squares (scaled by 0.5).
- "awr_nll": weighted negative log-likelihood under a softmax taken jointly
  over groups of consecutive input rows (a scene's per-object logit blocks
  concatenated); weights are the advantage terms, precomputed by the caller.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ACTIVATIONS = ("relu", "tanh", "sigmoid", "identity", "softmax")


@dataclass(frozen=True)
class NetParams:
    layer_sizes: tuple[int, ...]
    weights: tuple[np.ndarray, ...]  # each (out, in)
    biases: tuple[np.ndarray, ...]
    activations: tuple[str, ...]

    def __post_init__(self):
        L = len(self.layer_sizes) - 1
        if L < 1 or len(self.weights) != L or len(self.biases) != L or len(self.activations) != L:
            raise ValueError("layer shapes inconsistent")
        for l in range(L):
            if self.weights[l].shape != (self.layer_sizes[l + 1], self.layer_sizes[l]):
                raise ValueError("layer shapes inconsistent")
            if self.biases[l].shape != (self.layer_sizes[l + 1],):
                raise ValueError("layer shapes inconsistent")
            if self.activations[l] not in ACTIVATIONS:
                raise ValueError(f"unknown activation {self.activations[l]!r}")
            if not (np.isfinite(self.weights[l]).all() and np.isfinite(self.biases[l]).all()):
                raise ValueError("parameters must be finite")


def init_params(layer_sizes, activations, rng: np.random.Generator) -> NetParams:
    """He-style init for relu layers, Xavier-style otherwise; zero biases."""
    weights, biases = [], []
    for l, act in enumerate(activations):
        fan_in = layer_sizes[l]
        std = np.sqrt((2.0 if act == "relu" else 1.0) / fan_in)
        weights.append(rng.normal(0.0, std, size=(layer_sizes[l + 1], fan_in)))
        biases.append(np.zeros(layer_sizes[l + 1]))
    return NetParams(
        layer_sizes=tuple(int(n) for n in layer_sizes),
        weights=tuple(weights),
        biases=tuple(biases),
        activations=tuple(activations),
    )


def _apply_activation(z: np.ndarray, act: str) -> np.ndarray:
    if act == "relu":
        return np.maximum(z, 0.0)
    if act == "tanh":
        return np.tanh(z)
    if act == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    if act == "identity":
        return z
    if act == "softmax":
        e = np.exp(z - z.max(axis=-1, keepdims=True))
        return e / e.sum(axis=-1, keepdims=True)
    raise ValueError(f"unknown activation {act!r}")


def _forward_cached(params: NetParams, x: np.ndarray) -> list[np.ndarray]:
    """Activations per layer, input first; x must be (B, F)."""
    if x.ndim != 2 or x.shape[1] != params.layer_sizes[0]:
        raise ValueError("dimension mismatch")
    acts = [x]
    a = x
    for W, b, act in zip(params.weights, params.biases, params.activations):
        a = _apply_activation(a @ W.T + b, act)
        acts.append(a)
    return acts


def forward(params: NetParams, x) -> np.ndarray:
    """Network output for a single input vector or a (B, F) batch."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    out = _forward_cached(params, arr[None, :] if single else arr)[-1]
    return out[0] if single else out


def _activation_backward(grad: np.ndarray, out: np.ndarray, act: str) -> np.ndarray:
    if act == "relu":
        return grad * (out > 0.0)
    if act == "tanh":
        return grad * (1.0 - out * out)
    if act == "sigmoid":
        return grad * out * (1.0 - out)
    if act == "identity":
        return grad
    if act == "softmax":
        return out * (grad - (grad * out).sum(axis=-1, keepdims=True))
    raise ValueError(f"unknown activation {act!r}")


def _backprop(params: NetParams, acts: list[np.ndarray], d_out: np.ndarray):
    """Weight/bias gradients from the gradient at the network output."""
    dW = [None] * len(params.weights)
    db = [None] * len(params.biases)
    grad = d_out
    for l in range(len(params.weights) - 1, -1, -1):
        dz = _activation_backward(grad, acts[l + 1], params.activations[l])
        dW[l] = dz.T @ acts[l]
        db[l] = dz.sum(axis=0)
        if l > 0:
            grad = dz @ params.weights[l]
    return dW, db


def expectile_loss(u, tau: float):
    """|tau - 1(u < 0)| * u^2, elementwise."""
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0,1)")
    u = np.asarray(u, dtype=np.float64)
    w = np.where(u < 0.0, 1.0 - tau, tau)
    out = w * u * u
    return float(out) if out.ndim == 0 else out


def _output_grad_and_loss(params: NetParams, loss_tag: str, batch: dict):
    x = np.asarray(batch["x"], dtype=np.float64)
    if x.size == 0:
        raise ValueError("batch nonempty required")
    acts = _forward_cached(params, x)
    yhat = acts[-1]
    if loss_tag == "mse":
        y = np.asarray(batch["y"], dtype=np.float64).reshape(yhat.shape)
        B = x.shape[0]
        diff = yhat - y
        return acts, 2.0 * diff / B, float((diff * diff).sum() / B)
    if loss_tag == "expectile":
        y = np.asarray(batch["y"], dtype=np.float64).reshape(yhat.shape)
        tau = float(batch["tau"])
        B = x.shape[0]
        u = y - yhat
        w = np.where(u < 0.0, 1.0 - tau, tau)
        return acts, -2.0 * w * u / B, float((w * u * u).sum() / B)
    if loss_tag == "awr_nll":
        lengths = np.asarray(batch["lengths"], dtype=np.int64)
        index = np.asarray(batch["index"], dtype=np.int64)
        weight = np.asarray(batch["weight"], dtype=np.float64)
        B = len(lengths)
        out_dim = yhat.shape[1]
        d_out = np.zeros_like(yhat)
        loss = 0.0
        row = 0
        for g in range(B):
            block = yhat[row : row + lengths[g]].ravel()
            m = block.max()
            e = np.exp(block - m)
            p = e / e.sum()
            loss += weight[g] * (np.log(e.sum()) + m - block[index[g]])
            dflat = weight[g] * p / B
            dflat[index[g]] -= weight[g] / B
            d_out[row : row + lengths[g]] = dflat.reshape(lengths[g], out_dim)
            row += lengths[g]
        if row != x.shape[0]:
            raise ValueError("group lengths must cover all rows")
        return acts, d_out, float(loss / B)
    raise ValueError(f"unknown loss_tag {loss_tag!r}")


def gradients(params: NetParams, loss_tag: str, batch: dict):
    """Exact reverse-mode gradients of the tagged loss; (dW list, db list)."""
    acts, d_out, _ = _output_grad_and_loss(params, loss_tag, batch)
    return _backprop(params, acts, d_out)


def loss_value(params: NetParams, loss_tag: str, batch: dict) -> float:
    _, _, loss = _output_grad_and_loss(params, loss_tag, batch)
    return loss


# ---------------------------------------------------------------------------
# Adam

@dataclass(frozen=True)
class AdamState:
    t: int
    m: tuple[np.ndarray, ...]
    v: tuple[np.ndarray, ...]


def init_adam(params: NetParams) -> AdamState:
    flat = list(params.weights) + list(params.biases)
    return AdamState(t=0, m=tuple(np.zeros_like(p) for p in flat), v=tuple(np.zeros_like(p) for p in flat))


def adam_step(
    params: NetParams,
    grads: tuple[list[np.ndarray], list[np.ndarray]],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[NetParams, AdamState]:
    dW, db = grads
    gs = list(dW) + list(db)
    if not all(np.isfinite(g).all() for g in gs):
        raise ValueError("divergence")
    t = state.t + 1
    m = tuple(beta1 * m_ + (1.0 - beta1) * g for m_, g in zip(state.m, gs))
    v = tuple(beta2 * v_ + (1.0 - beta2) * g * g for v_, g in zip(state.v, gs))
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    flat = list(params.weights) + list(params.biases)
    new_flat = [
        p - lr * (m_ / c1) / (np.sqrt(v_ / c2) + eps)
        for p, m_, v_ in zip(flat, m, v)
    ]
    L = len(params.weights)
    new = NetParams(
        layer_sizes=params.layer_sizes,
        weights=tuple(new_flat[:L]),
        biases=tuple(new_flat[L:]),
        activations=params.activations,
    )
    return new, AdamState(t=t, m=m, v=v)


def polyak_update(target: NetParams, online: NetParams, rate: float) -> NetParams:
    """target + rate * (online - target), parameterwise."""
    return NetParams(
        layer_sizes=target.layer_sizes,
        weights=tuple(tw + rate * (ow - tw) for tw, ow in zip(target.weights, online.weights)),
        biases=tuple(tb + rate * (ob - tb) for tb, ob in zip(target.biases, online.biases)),
        activations=target.activations,
    )


# ---------------------------------------------------------------------------
# Checkpoints

def checkpoint_dict(params: NetParams, optimizer_state: AdamState | None = None, rng_seed=None, step: int = 0) -> dict:
    opt = None
    if optimizer_state is not None:
        opt = {
            "t": optimizer_state.t,
            "m": [a.tolist() for a in optimizer_state.m],
            "v": [a.tolist() for a in optimizer_state.v],
        }
    return {
        "layer_sizes": list(params.layer_sizes),
        "activations": list(params.activations),
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
        "optimizer_state": opt,
        "rng_seed": rng_seed,
        "step": step,
    }


def params_from_dict(d: dict) -> NetParams:
    return NetParams(
        layer_sizes=tuple(int(n) for n in d["layer_sizes"]),
        weights=tuple(np.array(w, dtype=np.float64) for w in d["weights"]),
        biases=tuple(np.array(b, dtype=np.float64) for b in d["biases"]),
        activations=tuple(d["activations"]),
    )


def save_checkpoint(path: str | Path, params: NetParams, optimizer_state: AdamState | None = None, rng_seed=None, step: int = 0) -> None:
    Path(path).write_text(json.dumps(checkpoint_dict(params, optimizer_state, rng_seed, step)) + "\n")


def load_checkpoint(path: str | Path) -> tuple[NetParams, AdamState | None, dict]:
    d = json.loads(Path(path).read_text())
    params = params_from_dict(d)
    state = None
    if d.get("optimizer_state"):
        o = d["optimizer_state"]
        state = AdamState(
            t=int(o["t"]),
            m=tuple(np.array(a, dtype=np.float64) for a in o["m"]),
            v=tuple(np.array(a, dtype=np.float64) for a in o["v"]),
        )
    return params, state, {"rng_seed": d.get("rng_seed"), "step": int(d.get("step", 0))}
