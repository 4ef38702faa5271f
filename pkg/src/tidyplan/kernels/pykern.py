"""Pure-numpy reference kernels for scene geometry and featurization.

These are the semantics of record; the compiled twin in ``_native.pyx``
must agree with them (see tests/test_kernels.py).  All functions take
packed scene arrays: poses (N,3) as [x_m, y_m, theta_deg], half (N,2)
half-extents, cats (N,) category indices, support (N,) flags.  Arrays are
expected in canonical (id-sorted) object order so that reductions are
order-stable and featurization is exactly permutation invariant.

Conventions: table frame +x = right, +y = behind; zero-area contact does
not count as a collision (GEOM_TOL penetration slack); an object is out
of bounds only if its footprint protrudes past the workspace rectangle.
"""

from __future__ import annotations

import math

import numpy as np

GEOM_TOL = 1e-9

# relation label ids: 8 planar sectors counterclockwise from +x, then on/under
SECTOR_KINDS = (
    "right",
    "right-behind",
    "behind",
    "left-behind",
    "left",
    "left-front",
    "front",
    "right-front",
)
LABEL_ON = 8
LABEL_UNDER = 9
N_LABELS = 10

N_BASE_FEATURES = 13  # category histogram appended after these
HIST_NORM = 8.0


def obb_overlap(ax, ay, atheta, ahx, ahy, bx, by, btheta, bhx, bhy) -> bool:
    """Positive-area intersection test for two oriented rectangles (SAT)."""
    ra = math.radians(atheta)
    rb = math.radians(btheta)
    ca, sa = math.cos(ra), math.sin(ra)
    cb, sb = math.cos(rb), math.sin(rb)
    dx, dy = bx - ax, by - ay
    # candidate separating axes: both rectangles' edge normals
    axes = ((ca, sa), (-sa, ca), (cb, sb), (-sb, cb))
    for ux, uy in axes:
        proj_a = ahx * abs(ux * ca + uy * sa) + ahy * abs(-ux * sa + uy * ca)
        proj_b = bhx * abs(ux * cb + uy * sb) + bhy * abs(-ux * sb + uy * cb)
        if abs(dx * ux + dy * uy) >= proj_a + proj_b - GEOM_TOL:
            return False
    return True


def point_in_obb(px, py, cx, cy, theta, hx, hy) -> bool:
    """Closed containment of a point in an oriented rectangle."""
    r = math.radians(theta)
    c, s = math.cos(r), math.sin(r)
    dx, dy = px - cx, py - cy
    lx = dx * c + dy * s
    ly = -dx * s + dy * c
    return abs(lx) <= hx + GEOM_TOL and abs(ly) <= hy + GEOM_TOL


def _pair_exempt(poses, half, support, i, j) -> bool:
    """True when overlap between i and j is a legal on/under placement."""
    if support[j] and point_in_obb(
        poses[i, 0], poses[i, 1], poses[j, 0], poses[j, 1], poses[j, 2], half[j, 0], half[j, 1]
    ):
        return True
    if support[i] and point_in_obb(
        poses[j, 0], poses[j, 1], poses[i, 0], poses[i, 1], poses[i, 2], half[i, 0], half[i, 1]
    ):
        return True
    return False


def illegal_pairs(poses, half, support) -> list[tuple[int, int]]:
    """Index pairs (i<j) whose footprints intersect without a support exemption."""
    n = poses.shape[0]
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            if not obb_overlap(
                poses[i, 0], poses[i, 1], poses[i, 2], half[i, 0], half[i, 1],
                poses[j, 0], poses[j, 1], poses[j, 2], half[j, 0], half[j, 1],
            ):
                continue
            if not _pair_exempt(poses, half, support, i, j):
                out.append((i, j))
    return out


def oob_flags(poses, half, width, depth) -> np.ndarray:
    """Per-object flag: footprint protrudes outside [0,width]x[0,depth]."""
    n = poses.shape[0]
    out = np.zeros(n, dtype=bool)
    for i in range(n):
        r = math.radians(poses[i, 2])
        c, s = abs(math.cos(r)), abs(math.sin(r))
        ex = half[i, 0] * c + half[i, 1] * s
        ey = half[i, 0] * s + half[i, 1] * c
        x, y = poses[i, 0], poses[i, 1]
        out[i] = (
            x - ex < -GEOM_TOL
            or x + ex > width + GEOM_TOL
            or y - ey < -GEOM_TOL
            or y + ey > depth + GEOM_TOL
        )
    return out


def sector_index(angle_deg: float) -> int:
    """45-degree sector of an offset angle; boundary ties go counterclockwise."""
    return int(math.floor((angle_deg + 22.5) / 45.0)) % 8


def pair_label(poses, half, support, i, j) -> int:
    """Relation label of subject j w.r.t. reference i; -1 for degenerate offsets."""
    if support[i] and point_in_obb(
        poses[j, 0], poses[j, 1], poses[i, 0], poses[i, 1], poses[i, 2], half[i, 0], half[i, 1]
    ):
        return LABEL_ON
    if support[j] and point_in_obb(
        poses[i, 0], poses[i, 1], poses[j, 0], poses[j, 1], poses[j, 2], half[j, 0], half[j, 1]
    ):
        return LABEL_UNDER
    dx = poses[j, 0] - poses[i, 0]
    dy = poses[j, 1] - poses[i, 1]
    if math.hypot(dx, dy) < 1e-12:
        return -1
    return sector_index(math.degrees(math.atan2(dy, dx)))


def feature_vector(poses, half, cats, support, width, depth, n_categories) -> np.ndarray:
    """Permutation-invariant scene statistics; length 13 + n_categories.

    Layout: [0:3] pair sector-alignment residual mean/min/max, [3:6]
    orientation residual mean/min/max, [6:8] nearest-neighbor gap
    mean/variance, [8] illegal-overlap pair fraction, [9] out-of-bounds
    fraction, [10:12] centroid offset from workspace center, [12] relation
    label entropy, [13:] per-category counts / 8.  Pairwise statistics are 0
    for scenes with fewer than two objects; N = 0 yields the all-zero
    sentinel used for "scene minus only object".
    """
    n = poses.shape[0]
    out = np.zeros(N_BASE_FEATURES + n_categories, dtype=np.float64)
    if n == 0:
        return out

    # orientation residual to the nearest table axis
    o_sum = 0.0
    o_min = math.inf
    o_max = -math.inf
    for i in range(n):
        m = math.fmod(poses[i, 2], 90.0)
        if m < 0.0:
            m += 90.0
        res = min(m, 90.0 - m) / 45.0
        o_sum += res
        o_min = min(o_min, res)
        o_max = max(o_max, res)
    out[3] = o_sum / n
    out[4] = o_min
    out[5] = o_max

    oob = oob_flags(poses, half, width, depth)
    out[9] = float(np.count_nonzero(oob)) / n

    cx = 0.0
    cy = 0.0
    for i in range(n):
        cx += poses[i, 0]
        cy += poses[i, 1]
    cx /= n
    cy /= n
    out[10] = (cx - 0.5 * width) / (0.5 * width)
    out[11] = (cy - 0.5 * depth) / (0.5 * depth)

    for i in range(n):
        out[N_BASE_FEATURES + int(cats[i])] += 1.0 / HIST_NORM

    if n >= 2:
        diag = math.hypot(width, depth)
        s_sum = 0.0
        s_min = math.inf
        s_max = -math.inf
        n_pairs = 0
        skipped = 0
        for i in range(n):
            for j in range(i + 1, n):
                dx = poses[j, 0] - poses[i, 0]
                dy = poses[j, 1] - poses[i, 1]
                n_pairs += 1
                # support-contact pairs carry no directional intent; their
                # jittered offsets would read as misalignment noise
                if math.hypot(dx, dy) < 1e-12 or _pair_exempt(poses, half, support, i, j):
                    skipped += 1
                    continue
                a = math.degrees(math.atan2(dy, dx))
                m = math.fmod(a, 45.0)
                if m < 0.0:
                    m += 45.0
                res = min(m, 45.0 - m) / 22.5
                s_sum += res
                s_min = min(s_min, res)
                s_max = max(s_max, res)
        if n_pairs > skipped:
            out[0] = s_sum / (n_pairs - skipped)
            out[1] = s_min
            out[2] = s_max

        gaps = np.zeros(n)
        for i in range(n):
            best = math.inf
            for j in range(n):
                if j == i:
                    continue
                d = math.hypot(poses[j, 0] - poses[i, 0], poses[j, 1] - poses[i, 1])
                best = min(best, d)
            gaps[i] = best / diag
        g_mean = 0.0
        for i in range(n):
            g_mean += gaps[i]
        g_mean /= n
        g_var = 0.0
        for i in range(n):
            g_var += (gaps[i] - g_mean) ** 2
        g_var /= n
        out[6] = g_mean
        out[7] = g_var

        out[8] = len(illegal_pairs(poses, half, support)) / n_pairs

        counts = np.zeros(N_LABELS)
        total = 0
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                lab = pair_label(poses, half, support, i, j)
                if lab >= 0:
                    counts[lab] += 1.0
                    total += 1
        if total > 0:
            ent = 0.0
            for k in range(N_LABELS):
                p = counts[k] / total
                if p > 0.0:
                    ent -= p * math.log(p)
            out[12] = ent / math.log(N_LABELS)

    return out


def feature_rows(poses, half, cats, support, width, depth, n_categories) -> np.ndarray:
    """Row i = feature_vector of the scene with object i removed.

    The policy consumes one such row per object; a single-object scene
    yields the empty-scene zero sentinel.
    """
    n = poses.shape[0]
    out = np.zeros((n, N_BASE_FEATURES + n_categories), dtype=np.float64)
    for i in range(n):
        out[i] = feature_vector(
            np.delete(poses, i, axis=0),
            np.delete(half, i, axis=0),
            np.delete(cats, i),
            np.delete(support, i),
            width,
            depth,
            n_categories,
        )
    return out


def placement_feasible(poses, half, support, idx, x, y, theta, width, depth) -> bool:
    """Would object idx, re-posed to (x, y, theta), keep the scene valid?"""
    r = math.radians(theta)
    c, s = abs(math.cos(r)), abs(math.sin(r))
    ex = half[idx, 0] * c + half[idx, 1] * s
    ey = half[idx, 0] * s + half[idx, 1] * c
    if x - ex < -GEOM_TOL or x + ex > width + GEOM_TOL:
        return False
    if y - ey < -GEOM_TOL or y + ey > depth + GEOM_TOL:
        return False
    n = poses.shape[0]
    for j in range(n):
        if j == idx:
            continue
        if not obb_overlap(
            x, y, theta, half[idx, 0], half[idx, 1],
            poses[j, 0], poses[j, 1], poses[j, 2], half[j, 0], half[j, 1],
        ):
            continue
        if support[j] and point_in_obb(
            x, y, poses[j, 0], poses[j, 1], poses[j, 2], half[j, 0], half[j, 1]
        ):
            continue
        if support[idx] and point_in_obb(
            poses[j, 0], poses[j, 1], x, y, theta, half[idx, 0], half[idx, 1]
        ):
            continue
        return False
    return True


def placement_mask(poses, half, support, width, depth, grid_h, grid_w, nrot) -> np.ndarray:
    """Feasibility of every (object, cell x, cell y, rotation) placement."""
    n = poses.shape[0]
    mask = np.zeros((n, grid_w, grid_h, nrot), dtype=bool)
    for i in range(n):
        for xi in range(grid_w):
            x = (xi + 0.5) * width / grid_w
            for yi in range(grid_h):
                y = (yi + 0.5) * depth / grid_h
                for r in range(nrot):
                    theta = r * 360.0 / nrot
                    mask[i, xi, yi, r] = placement_feasible(
                        poses, half, support, i, x, y, theta, width, depth
                    )
    return mask
