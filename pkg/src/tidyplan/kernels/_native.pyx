# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of the numpy reference kernels (pykern.py).

Semantics of record live in pykern; every branch and reduction order here
mirrors it so results agree bit-for-bit up to libm ulp differences.  The
parity suite swaps backends and compares.
"""

import numpy as np

from libc.math cimport M_PI, INFINITY, atan2, cos, fabs, floor, fmod, hypot, log, sin

DEF GEOM_TOL = 1e-9
DEF N_BASE = 13
DEF HIST_NORM = 8.0
DEF N_LABELS_C = 10

LABEL_ON = 8
LABEL_UNDER = 9
N_LABELS = N_LABELS_C
N_BASE_FEATURES = N_BASE


cdef inline double _rad(double deg) nogil:
    return deg * (M_PI / 180.0)


cdef inline double _deg(double rad) nogil:
    return rad * (180.0 / M_PI)


cdef inline double _fmin(double a, double b) nogil:
    return a if a < b else b


cdef inline double _fmax(double a, double b) nogil:
    return a if a > b else b


cdef inline bint _obb_overlap(
    double ax, double ay, double atheta, double ahx, double ahy,
    double bx, double by, double btheta, double bhx, double bhy,
) nogil:
    cdef double ra = _rad(atheta)
    cdef double rb = _rad(btheta)
    cdef double ca = cos(ra), sa = sin(ra)
    cdef double cb = cos(rb), sb = sin(rb)
    cdef double dx = bx - ax, dy = by - ay
    cdef double ux, uy, proj_a, proj_b
    cdef int k
    for k in range(4):
        if k == 0:
            ux = ca; uy = sa
        elif k == 1:
            ux = -sa; uy = ca
        elif k == 2:
            ux = cb; uy = sb
        else:
            ux = -sb; uy = cb
        proj_a = ahx * fabs(ux * ca + uy * sa) + ahy * fabs(-ux * sa + uy * ca)
        proj_b = bhx * fabs(ux * cb + uy * sb) + bhy * fabs(-ux * sb + uy * cb)
        if fabs(dx * ux + dy * uy) >= proj_a + proj_b - GEOM_TOL:
            return False
    return True


cdef inline bint _point_in_obb(
    double px, double py, double cx, double cy, double theta, double hx, double hy
) nogil:
    cdef double r = _rad(theta)
    cdef double c = cos(r), s = sin(r)
    cdef double dx = px - cx, dy = py - cy
    cdef double lx = dx * c + dy * s
    cdef double ly = -dx * s + dy * c
    return fabs(lx) <= hx + GEOM_TOL and fabs(ly) <= hy + GEOM_TOL


cdef inline bint _exempt(
    const double[:, ::1] poses, const double[:, ::1] half,
    const unsigned char[::1] support, Py_ssize_t i, Py_ssize_t j,
) nogil:
    if support[j] and _point_in_obb(
        poses[i, 0], poses[i, 1], poses[j, 0], poses[j, 1], poses[j, 2], half[j, 0], half[j, 1]
    ):
        return True
    if support[i] and _point_in_obb(
        poses[j, 0], poses[j, 1], poses[i, 0], poses[i, 1], poses[i, 2], half[i, 0], half[i, 1]
    ):
        return True
    return False


cdef inline bint _oob_one(
    const double[:, ::1] poses, const double[:, ::1] half,
    Py_ssize_t i, double width, double depth,
) nogil:
    cdef double r = _rad(poses[i, 2])
    cdef double c = fabs(cos(r)), s = fabs(sin(r))
    cdef double ex = half[i, 0] * c + half[i, 1] * s
    cdef double ey = half[i, 0] * s + half[i, 1] * c
    cdef double x = poses[i, 0], y = poses[i, 1]
    return (
        x - ex < -GEOM_TOL
        or x + ex > width + GEOM_TOL
        or y - ey < -GEOM_TOL
        or y + ey > depth + GEOM_TOL
    )


cdef inline int _sector(double angle_deg) nogil:
    cdef int k = <int>floor((angle_deg + 22.5) / 45.0) % 8
    if k < 0:
        k += 8
    return k


cdef inline int _label(
    const double[:, ::1] poses, const double[:, ::1] half,
    const unsigned char[::1] support, Py_ssize_t i, Py_ssize_t j,
) nogil:
    cdef double dx, dy
    if support[i] and _point_in_obb(
        poses[j, 0], poses[j, 1], poses[i, 0], poses[i, 1], poses[i, 2], half[i, 0], half[i, 1]
    ):
        return 8
    if support[j] and _point_in_obb(
        poses[i, 0], poses[i, 1], poses[j, 0], poses[j, 1], poses[j, 2], half[j, 0], half[j, 1]
    ):
        return 9
    dx = poses[j, 0] - poses[i, 0]
    dy = poses[j, 1] - poses[i, 1]
    if hypot(dx, dy) < 1e-12:
        return -1
    return _sector(_deg(atan2(dy, dx)))


cdef inline bint _feasible(
    const double[:, ::1] poses, const double[:, ::1] half,
    const unsigned char[::1] support, Py_ssize_t idx,
    double x, double y, double theta, double width, double depth,
) nogil:
    cdef double r = _rad(theta)
    cdef double c = fabs(cos(r)), s = fabs(sin(r))
    cdef double ex = half[idx, 0] * c + half[idx, 1] * s
    cdef double ey = half[idx, 0] * s + half[idx, 1] * c
    cdef Py_ssize_t j, n = poses.shape[0]
    if x - ex < -GEOM_TOL or x + ex > width + GEOM_TOL:
        return False
    if y - ey < -GEOM_TOL or y + ey > depth + GEOM_TOL:
        return False
    for j in range(n):
        if j == idx:
            continue
        if not _obb_overlap(
            x, y, theta, half[idx, 0], half[idx, 1],
            poses[j, 0], poses[j, 1], poses[j, 2], half[j, 0], half[j, 1],
        ):
            continue
        if support[j] and _point_in_obb(
            x, y, poses[j, 0], poses[j, 1], poses[j, 2], half[j, 0], half[j, 1]
        ):
            continue
        if support[idx] and _point_in_obb(
            poses[j, 0], poses[j, 1], x, y, theta, half[idx, 0], half[idx, 1]
        ):
            continue
        return False
    return True


cdef _poses_half(poses, half):
    cdef object p = np.ascontiguousarray(np.asarray(poses, dtype=np.float64))
    cdef object h = np.ascontiguousarray(np.asarray(half, dtype=np.float64))
    if p.ndim != 2:
        p = p.reshape(-1, 3)
    if h.ndim != 2:
        h = h.reshape(-1, 2)
    return p, h


cdef _flags(support):
    return np.ascontiguousarray(np.asarray(support, dtype=np.uint8))


def obb_overlap(ax, ay, atheta, ahx, ahy, bx, by, btheta, bhx, bhy):
    return bool(_obb_overlap(ax, ay, atheta, ahx, ahy, bx, by, btheta, bhx, bhy))


def point_in_obb(px, py, cx, cy, theta, hx, hy):
    return bool(_point_in_obb(px, py, cx, cy, theta, hx, hy))


def sector_index(angle_deg):
    return _sector(angle_deg)


def illegal_pairs(poses, half, support):
    p_arr, h_arr = _poses_half(poses, half)
    s_arr = _flags(support)
    cdef const double[:, ::1] p = p_arr
    cdef const double[:, ::1] h = h_arr
    cdef const unsigned char[::1] s = s_arr
    cdef Py_ssize_t i, j, n = p.shape[0]
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            if not _obb_overlap(
                p[i, 0], p[i, 1], p[i, 2], h[i, 0], h[i, 1],
                p[j, 0], p[j, 1], p[j, 2], h[j, 0], h[j, 1],
            ):
                continue
            if not _exempt(p, h, s, i, j):
                out.append((i, j))
    return out


def oob_flags(poses, half, width, depth):
    p_arr, h_arr = _poses_half(poses, half)
    cdef const double[:, ::1] p = p_arr
    cdef const double[:, ::1] h = h_arr
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double w = width, d = depth
    out = np.zeros(n, dtype=bool)
    cdef unsigned char[::1] o = out.view(np.uint8)
    for i in range(n):
        o[i] = _oob_one(p, h, i, w, d)
    return out


def pair_label(poses, half, support, i, j):
    p_arr, h_arr = _poses_half(poses, half)
    s_arr = _flags(support)
    cdef const double[:, ::1] p = p_arr
    cdef const double[:, ::1] h = h_arr
    cdef const unsigned char[::1] s = s_arr
    return _label(p, h, s, i, j)


def placement_feasible(poses, half, support, idx, x, y, theta, width, depth):
    p_arr, h_arr = _poses_half(poses, half)
    s_arr = _flags(support)
    cdef const double[:, ::1] p = p_arr
    cdef const double[:, ::1] h = h_arr
    cdef const unsigned char[::1] s = s_arr
    return bool(_feasible(p, h, s, idx, x, y, theta, width, depth))


def placement_mask(poses, half, support, width, depth, grid_h, grid_w, nrot):
    p_arr, h_arr = _poses_half(poses, half)
    s_arr = _flags(support)
    cdef const double[:, ::1] p = p_arr
    cdef const double[:, ::1] h = h_arr
    cdef const unsigned char[::1] s = s_arr
    cdef Py_ssize_t i, xi, yi, r
    cdef Py_ssize_t n = p.shape[0], gw = grid_w, gh = grid_h, nr = nrot
    cdef double w = width, d = depth, x, y, theta
    out = np.zeros((n, gw, gh, nr), dtype=bool)
    cdef unsigned char[:, :, :, ::1] m = out.view(np.uint8)
    with nogil:
        for i in range(n):
            for xi in range(gw):
                x = (xi + 0.5) * w / gw
                for yi in range(gh):
                    y = (yi + 0.5) * d / gh
                    for r in range(nr):
                        theta = r * 360.0 / nr
                        m[i, xi, yi, r] = _feasible(p, h, s, i, x, y, theta, w, d)
    return out


cdef void _features_into(
    const double[:, ::1] p, const double[:, ::1] h,
    const Py_ssize_t[::1] c, const unsigned char[::1] s,
    Py_ssize_t skip, double w, double d, Py_ssize_t ncat, double[::1] o,
) nogil:
    # out must arrive zeroed; iteration order matches the skip-row-deleted
    # arrays so reductions round identically to the reference
    cdef Py_ssize_t n_all = p.shape[0]
    cdef Py_ssize_t n = n_all - (1 if 0 <= skip < n_all else 0)
    if n == 0:
        return

    cdef Py_ssize_t i, j, k
    cdef double m, res, o_sum = 0.0, o_min = INFINITY, o_max = -INFINITY

    for i in range(n_all):
        if i == skip:
            continue
        m = fmod(p[i, 2], 90.0)
        if m < 0.0:
            m += 90.0
        res = _fmin(m, 90.0 - m) / 45.0
        o_sum += res
        o_min = _fmin(o_min, res)
        o_max = _fmax(o_max, res)
    o[3] = o_sum / n
    o[4] = o_min
    o[5] = o_max

    cdef Py_ssize_t n_oob = 0
    for i in range(n_all):
        if i == skip:
            continue
        if _oob_one(p, h, i, w, d):
            n_oob += 1
    o[9] = (<double>n_oob) / n

    cdef double cx = 0.0, cy = 0.0
    for i in range(n_all):
        if i == skip:
            continue
        cx += p[i, 0]
        cy += p[i, 1]
    cx /= n
    cy /= n
    o[10] = (cx - 0.5 * w) / (0.5 * w)
    o[11] = (cy - 0.5 * d) / (0.5 * d)

    for i in range(n_all):
        if i == skip:
            continue
        o[N_BASE + c[i]] += 1.0 / HIST_NORM

    if n < 2:
        return

    cdef double diag = hypot(w, d)
    cdef double dx, dy, a
    cdef double s_sum = 0.0, s_min = INFINITY, s_max = -INFINITY
    cdef Py_ssize_t n_pairs = 0, skipped = 0
    for i in range(n_all):
        if i == skip:
            continue
        for j in range(i + 1, n_all):
            if j == skip:
                continue
            dx = p[j, 0] - p[i, 0]
            dy = p[j, 1] - p[i, 1]
            n_pairs += 1
            if hypot(dx, dy) < 1e-12 or _exempt(p, h, s, i, j):
                skipped += 1
                continue
            a = _deg(atan2(dy, dx))
            m = fmod(a, 45.0)
            if m < 0.0:
                m += 45.0
            res = _fmin(m, 45.0 - m) / 22.5
            s_sum += res
            s_min = _fmin(s_min, res)
            s_max = _fmax(s_max, res)
    if n_pairs > skipped:
        o[0] = s_sum / (n_pairs - skipped)
        o[1] = s_min
        o[2] = s_max

    cdef double best, dist, g_mean = 0.0, g_var = 0.0, gap_i
    # two passes over nearest-neighbor gaps (mean then variance) without a
    # scratch buffer: recompute per object, matching the reference exactly
    for i in range(n_all):
        if i == skip:
            continue
        best = INFINITY
        for j in range(n_all):
            if j == i or j == skip:
                continue
            dist = hypot(p[j, 0] - p[i, 0], p[j, 1] - p[i, 1])
            best = _fmin(best, dist)
        g_mean += best / diag
    g_mean /= n
    for i in range(n_all):
        if i == skip:
            continue
        best = INFINITY
        for j in range(n_all):
            if j == i or j == skip:
                continue
            dist = hypot(p[j, 0] - p[i, 0], p[j, 1] - p[i, 1])
            best = _fmin(best, dist)
        gap_i = best / diag
        g_var += (gap_i - g_mean) ** 2
    g_var /= n
    o[6] = g_mean
    o[7] = g_var

    cdef Py_ssize_t n_illegal = 0
    for i in range(n_all):
        if i == skip:
            continue
        for j in range(i + 1, n_all):
            if j == skip:
                continue
            if not _obb_overlap(
                p[i, 0], p[i, 1], p[i, 2], h[i, 0], h[i, 1],
                p[j, 0], p[j, 1], p[j, 2], h[j, 0], h[j, 1],
            ):
                continue
            if not _exempt(p, h, s, i, j):
                n_illegal += 1
    o[8] = (<double>n_illegal) / n_pairs

    cdef double counts[N_LABELS_C]
    for k in range(N_LABELS_C):
        counts[k] = 0.0
    cdef Py_ssize_t total = 0
    cdef int lab
    for i in range(n_all):
        if i == skip:
            continue
        for j in range(n_all):
            if i == j or j == skip:
                continue
            lab = _label(p, h, s, i, j)
            if lab >= 0:
                counts[lab] += 1.0
                total += 1
    cdef double ent = 0.0, prob
    if total > 0:
        for k in range(N_LABELS_C):
            prob = counts[k] / total
            if prob > 0.0:
                ent -= prob * log(prob)
        o[12] = ent / log(<double>N_LABELS_C)


def feature_vector(poses, half, cats, support, width, depth, n_categories):
    p_arr, h_arr = _poses_half(poses, half)
    s_arr = _flags(support)
    c_arr = np.ascontiguousarray(np.asarray(cats, dtype=np.intp))
    cdef const double[:, ::1] p = p_arr
    cdef const double[:, ::1] h = h_arr
    cdef const unsigned char[::1] s = s_arr
    cdef const Py_ssize_t[::1] c = c_arr
    out = np.zeros(N_BASE + <Py_ssize_t>n_categories, dtype=np.float64)
    cdef double[::1] o = out
    _features_into(p, h, c, s, -1, width, depth, n_categories, o)
    return out


def feature_rows(poses, half, cats, support, width, depth, n_categories):
    p_arr, h_arr = _poses_half(poses, half)
    s_arr = _flags(support)
    c_arr = np.ascontiguousarray(np.asarray(cats, dtype=np.intp))
    cdef const double[:, ::1] p = p_arr
    cdef const double[:, ::1] h = h_arr
    cdef const unsigned char[::1] s = s_arr
    cdef const Py_ssize_t[::1] c = c_arr
    cdef Py_ssize_t i, n = p.shape[0]
    out = np.zeros((n, N_BASE + <Py_ssize_t>n_categories), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double w = width, d = depth
    cdef Py_ssize_t ncat = n_categories
    with nogil:
        for i in range(n):
            _features_into(p, h, c, s, i, w, d, ncat, o[i])
    return out
