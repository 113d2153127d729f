"""Benchmark the compiled sweep kernels against the numpy fallback.

Times the raw per-axis kernels on representative pencil-batch shapes and a
full multi-axis step on 3-D acoustics grids, with each backend swapped in.

    python3 benchmarks/bench_backends.py [--repeats 30]
"""
import argparse
import time

import numpy as np

from hypersolve import _backend
from hypersolve._backend import available_backends, get_backend
from hypersolve.grid import Grid, GridFunction
from hypersolve.problems import acoustics_system
from hypersolve.scheme import BoundarySpec, cfl_timestep, step_multi

KERNEL_SHAPES = [
    (1024, 64, 4),   # 2-D 64x64 grid, 4 components, one axis
    (4096, 32, 4),   # 3-D 32^3 acoustics pencils
    (16384, 16, 9),  # 3-D 16^3 elasticity pencils
]


def time_call(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_kernels(repeats):
    rng = np.random.default_rng(0)
    print(f"{'shape (P,N,n)':>18} {'kernel':>14} " + " ".join(f"{b:>12}" for b in available_backends()))
    for shape in KERNEL_SHAPES:
        P, N, n = shape
        v = rng.standard_normal(shape)
        a = rng.uniform(0.0, 1.0, size=n)
        sgn = rng.integers(-1, 2, size=n).astype(np.int64)
        a[sgn == 0] = 0.0
        for name in ("axis_sweep_convex", "axis_sweep_delta"):
            row = []
            for backend in available_backends():
                fn = getattr(get_backend(backend), name)
                t = time_call(lambda: fn(v, a, sgn, None, None, True), repeats)
                row.append(f"{t * 1e3:9.3f} ms")
            print(f"{str(shape):>18} {name.replace('axis_sweep_', ''):>14} " + " ".join(f"{r:>12}" for r in row))


def bench_full_step(repeats):
    print(f"\n{'full step':>18} " + " ".join(f"{b:>12}" for b in available_backends()))
    for k in (5, 6):
        system = acoustics_system(1.0, 1.0, dim=3)
        grid = Grid(3, k)
        rng = np.random.default_rng(k)
        u = GridFunction(grid, rng.standard_normal((grid.cells_per_axis,) * 3 + (4,)))
        tau = cfl_timestep(system, grid.h).tau
        boundary = BoundarySpec.cauchy(3)
        row = []
        saved = (_backend.axis_sweep_convex, _backend.axis_sweep_delta)
        try:
            for backend in available_backends():
                impl = get_backend(backend)
                _backend.axis_sweep_convex = impl.axis_sweep_convex
                _backend.axis_sweep_delta = impl.axis_sweep_delta
                t = time_call(
                    lambda: step_multi(u, system, boundary, tau), max(3, repeats // 5)
                )
                row.append(f"{t * 1e3:9.3f} ms")
        finally:
            _backend.axis_sweep_convex, _backend.axis_sweep_delta = saved
        print(f"{f'acoustics 3-D k={k}':>18} " + " ".join(f"{r:>12}" for r in row))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=30)
    args = parser.parse_args()
    print(f"available backends: {', '.join(available_backends())}")
    bench_kernels(args.repeats)
    bench_full_step(args.repeats)


if __name__ == "__main__":
    main()
