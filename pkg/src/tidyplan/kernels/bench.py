"""Micro-benchmark comparing the kernel backends.

Run as ``python -m tidyplan.kernels.bench``.  Reports per-call time for the
hot kernels on a handful of synthetic scenes; the python rows double as the
baseline the compiled extension is judged against.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from . import backend_name, feature_vector, have_native, illegal_pairs, placement_mask, use_backend


def _scenes(rng: np.random.Generator, count: int, n_objects: int):
    out = []
    for _ in range(count):
        poses = np.column_stack(
            [
                rng.uniform(0.1, 0.9, n_objects),
                rng.uniform(0.1, 0.6, n_objects),
                rng.uniform(0.0, 360.0, n_objects),
            ]
        )
        half = rng.uniform(0.01, 0.1, (n_objects, 2))
        cats = rng.integers(0, 34, n_objects)
        support = rng.random(n_objects) < 0.3
        out.append((np.ascontiguousarray(poses), np.ascontiguousarray(half), cats, support))
    return out


def _time(fn, repeats: int) -> float:
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="kernel backend micro-benchmark")
    parser.add_argument("--objects", type=int, default=5)
    parser.add_argument("--repeats", type=int, default=500)
    args = parser.parse_args(argv)

    scenes = _scenes(np.random.default_rng(0), 8, args.objects)
    initial = backend_name()
    backends = ["python"] + (["native"] if have_native() else [])
    if len(backends) == 1:
        print("compiled extension not available; timing the fallback only")

    rows = []
    for be in backends:
        use_backend(be)
        feat = _time(
            lambda: [feature_vector(p, h, c, s, 1.0, 0.7, 34) for p, h, c, s in scenes],
            args.repeats,
        ) / len(scenes)
        pairs = _time(
            lambda: [illegal_pairs(p, h, s) for p, h, _, s in scenes], args.repeats
        ) / len(scenes)
        mask = _time(
            lambda: placement_mask(*scenes[0][:2], scenes[0][3], 1.0, 0.7, 16, 16, 4),
            max(args.repeats // 10, 1),
        )
        rows.append((be, feat * 1e6, pairs * 1e6, mask * 1e3))

    print(f"{'backend':<8} {'feature_vector':>16} {'illegal_pairs':>15} {'placement_mask':>16}")
    for be, feat, pairs, mask in rows:
        print(f"{be:<8} {feat:>13.1f} us {pairs:>12.1f} us {mask:>13.2f} ms")
    if len(rows) == 2:
        print(
            f"speedup: feature {rows[0][1] / rows[1][1]:.0f}x, "
            f"pairs {rows[0][2] / rows[1][2]:.0f}x, mask {rows[0][3] / rows[1][3]:.0f}x"
        )
    use_backend(initial)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
