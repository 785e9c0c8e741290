"""Timing comparison of the numpy and numba kernel backends.

Usage:

    python3 benchmarks/bench_backends.py [--repeat 5] [--n 200000]

Each kernel runs on identical inputs under both backends; outputs are
cross-checked before timing so a fast wrong kernel cannot win.  Numba
compile time is excluded (one warmup call per kernel).
"""

import argparse
import time

import numpy as np

from sqkit import Superquadric
from sqkit.kernels import NUMPY_IMPLS, jit_impls
from sqkit.mesh import make_mesh


def timer(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def build_cases(n):
    rng = np.random.default_rng(0)
    sq = Superquadric.from_params(0.4, 1.3, (30.0, 22.0, 14.0))
    pts = rng.uniform(-40.0, 40.0, (n, 3))
    mesh = make_mesh(sq, 24)
    probe = rng.uniform(-40.0, 40.0, (n // 20, 3))
    lo = mesh.vertices.min(axis=0)
    voxel = 2.0
    dims = np.ceil((mesh.vertices.max(axis=0) - lo) / voxel).astype(int)
    shape_args = (pts, 0.4, 1.3, 30.0, 22.0, 14.0)
    mesh_args = (mesh.vertices, mesh.faces, probe)
    grid_args = (mesh.vertices, mesh.faces, lo, voxel,
                 int(dims[0]), int(dims[1]), int(dims[2]))
    return {
        "implicit_values": shape_args,
        "radial_values": shape_args,
        "point_mesh_distance": mesh_args,
        "points_inside_mesh": mesh_args,
        "voxel_fill": grid_args,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=200_000)
    args = ap.parse_args()

    cases = build_cases(args.n)
    jit = jit_impls()

    print(f"{'kernel':<22} {'numpy':>10} {'numba':>10} {'speedup':>9}")
    for name, call_args in cases.items():
        ref = NUMPY_IMPLS[name](*call_args)
        out = jit[name](*call_args)  # warmup and agreement check
        if not np.allclose(np.asarray(ref, dtype=float),
                           np.asarray(out, dtype=float),
                           rtol=1e-10, atol=1e-10):
            raise SystemExit(f"{name}: backends disagree")
        t_np = timer(NUMPY_IMPLS[name], call_args, args.repeat)
        t_jit = timer(jit[name], call_args, args.repeat)
        print(f"{name:<22} {1e3 * t_np:>8.2f}ms {1e3 * t_jit:>8.2f}ms "
              f"{t_np / t_jit:>8.1f}x")


if __name__ == "__main__":
    main()
