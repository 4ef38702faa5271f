"""Ellipse fitting for placement orientation: objects read as tidier when
their long axis lines up with a table axis, so we fit an ellipse to the
footprint boundary and rotate the major axis onto whichever axis is nearer.

The fit is the direct algebraic least-squares conic constrained to an
ellipse (Halir and Flusser's partitioned formulation), solved on centered,
isotropically scaled points for conditioning.  Geometric parameters come
from the quadratic-form eigendecomposition, so the major axis is the
eigenvector of the smaller eigenvalue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .world import ObjectInstance

# axis ratio below which a footprint counts as circularly symmetric
ROUNDNESS_CUTOFF = 1.05


@dataclass(frozen=True)
class EllipseFit:
    center: tuple[float, float]
    semi_axes: tuple[float, float]  # (a, b), a >= b
    angle: float  # major-axis direction, degrees in [0, 180)
    eccentricity_ok: bool

    def __post_init__(self):
        a, b = self.semi_axes
        if not (a >= b > 0.0):
            raise ValueError("semi-axes must satisfy a >= b > 0")
        if not 0.0 <= self.angle < 180.0:
            raise ValueError("angle must lie in [0, 180)")


def fit_ellipse(points) -> EllipseFit:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 6:
        raise ValueError("degenerate point set")
    mean = pts.mean(axis=0)
    centered = pts - mean
    scale = float(np.sqrt((centered**2).sum(axis=1).mean()))
    if scale <= 0.0 or np.linalg.matrix_rank(centered) < 2:
        raise ValueError("degenerate point set")
    x = centered[:, 0] / scale
    y = centered[:, 1] / scale

    d1 = np.column_stack([x * x, x * y, y * y])
    d2 = np.column_stack([x, y, np.ones_like(x)])
    s1 = d1.T @ d1
    s2 = d1.T @ d2
    s3 = d2.T @ d2
    try:
        t = -np.linalg.solve(s3, s2.T)
    except np.linalg.LinAlgError:
        raise ValueError("degenerate point set") from None
    m = s1 + s2 @ t
    reduced = np.array([m[2] / 2.0, -m[1], m[0] / 2.0])
    eigvals, eigvecs = np.linalg.eig(reduced)
    real_vecs = np.real(eigvecs)
    cond = 4.0 * real_vecs[0] * real_vecs[2] - real_vecs[1] ** 2
    real_ok = np.abs(np.imag(eigvals)) <= 1e-9 * (1.0 + np.abs(np.real(eigvals)))
    candidates = np.where((cond > 0.0) & real_ok)[0]
    if len(candidates) == 0:
        raise ValueError("non-elliptic fit")
    a1 = real_vecs[:, candidates[0]]
    coeffs = np.concatenate([a1, t @ a1])  # A, B, C, D, E, F on scaled coords

    A, B, C, D, E, F = coeffs
    if B * B - 4.0 * A * C >= 0.0:
        raise ValueError("non-elliptic fit")
    q = np.array([[A, B / 2.0], [B / 2.0, C]])
    try:
        cx, cy = np.linalg.solve(2.0 * q, [-D, -E])
    except np.linalg.LinAlgError:
        raise ValueError("non-elliptic fit") from None
    f0 = A * cx * cx + B * cx * cy + C * cy * cy + D * cx + E * cy + F
    lam, vecs = np.linalg.eigh(q)
    radii_sq = -f0 / lam
    if not np.all(radii_sq > 0.0):
        raise ValueError("non-elliptic fit")
    radii = np.sqrt(radii_sq)
    major = int(np.argmax(radii))
    vx, vy = vecs[:, major]
    angle = math.degrees(math.atan2(vy, vx)) % 180.0
    a = float(radii[major] * scale)
    b = float(radii[1 - major] * scale)
    return EllipseFit(
        center=(float(cx * scale + mean[0]), float(cy * scale + mean[1])),
        semi_axes=(a, b),
        angle=angle,
        eccentricity_ok=a / b >= ROUNDNESS_CUTOFF,
    )


def alignment_rotation(fit: EllipseFit) -> float:
    """Signed degrees in (-45, 45] carrying the major axis onto the nearest
    table axis; round objects get 0; the 45-degree tie goes positive."""
    if not fit.eccentricity_ok:
        return 0.0
    residual = fit.angle % 90.0
    if residual < 45.0:
        return -residual
    return 90.0 - residual


def footprint_points(obj: ObjectInstance, samples: int) -> list[tuple[float, float]]:
    """Evenly spaced boundary points of the object's pose-transformed
    rectangle, starting at the (+hx, +hy) corner and walking counterclockwise."""
    if samples < 8:
        raise ValueError("samples must be >= 8")
    hx, hy = obj.half_extents
    corners = np.array([[hx, hy], [-hx, hy], [-hx, -hy], [hx, -hy], [hx, hy]])
    edges = np.diff(corners, axis=0)
    lengths = np.linalg.norm(edges, axis=1)
    bounds = np.concatenate([[0.0], np.cumsum(lengths)])
    perimeter = bounds[-1]
    distances = np.arange(samples) * perimeter / samples
    pts = np.empty((samples, 2))
    for k, s in enumerate(distances):
        e = min(int(np.searchsorted(bounds, s, side="right")) - 1, 3)
        frac = (s - bounds[e]) / lengths[e]
        pts[k] = corners[e] + frac * edges[e]
    x, y, theta = obj.pose
    rad = math.radians(theta)
    rot = np.array([[math.cos(rad), -math.sin(rad)], [math.sin(rad), math.cos(rad)]])
    world = pts @ rot.T + np.array([x, y])
    return [(float(px), float(py)) for px, py in world]


def aligned_rotation_bin(obj: ObjectInstance, rotation_bins: int, samples: int = 64) -> int:
    """Discrete rotation whose bin angle sits closest to the object's current
    orientation after axis alignment."""
    fit = fit_ellipse(footprint_points(obj, samples))
    target = (obj.pose[2] + alignment_rotation(fit)) % 360.0
    step = 360.0 / rotation_bins
    return int(round(target / step)) % rotation_bins
