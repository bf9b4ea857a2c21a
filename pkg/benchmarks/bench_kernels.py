"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 20]

Also times one full RK4 step so the kernel share of a step is visible.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from bsq import _kernels_py
from bsq.dynamics import StepperConfig, SystemSpec, make_initial, step
from bsq.spectral import GridSpec, random_vector

try:
    from bsq import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None


def cases():
    for dim, n in ((2, 64), (2, 128), (3, 32)):
        grid = GridSpec(dim, n)
        v = random_vector(grid, 0).coeffs
        phys = np.ascontiguousarray(np.fft.ifftn(v, axes=tuple(range(1, dim + 1))).real)
        depth = int(np.log2(n)) - 1
        yield f"leray {dim}D n={n}", lambda m, v=v, g=grid: m.leray_project(v, g.wavenumbers)
        yield f"bmo {dim}D n={n}", lambda m, p=phys, d=depth: m.dyadic_bmo(p, d)
        yield f"contract {dim}D n={n}", lambda m, p=phys: m.contract(p, p)


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    print(f"{'kernel':<22}{'numpy [ms]':>12}{'cython [ms]':>13}{'speedup':>9}")
    for name, fn in cases():
        tp = best(lambda: fn(_kernels_py), args.repeat)
        if _kernels_c is None:
            print(f"{name:<22}{tp * 1e3:12.3f}{'n/a':>13}{'':>9}")
            continue
        tc = best(lambda: fn(_kernels_c), args.repeat)
        print(f"{name:<22}{tp * 1e3:12.3f}{tc * 1e3:13.3f}{tp / tc:9.2f}")
    grid = GridSpec(2, 128)
    spec = SystemSpec(nu=0.01, R=42)
    st = make_initial("random_spectrum", grid, spec.R)
    cfg = StepperConfig("rk4_if", 1e-3)
    ts = best(lambda: step(st, spec, cfg), max(3, args.repeat // 4))
    print(f"full rk4_if step 2D n=128: {ts * 1e3:.2f} ms")


if __name__ == "__main__":
    main()
