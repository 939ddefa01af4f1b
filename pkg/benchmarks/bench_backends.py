#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the numpy fallback.

Times the three hot kernels on a realistic per-step workload and a full
preset run under each backend. Run from the repo root:

    PYTHONPATH=src python3 benchmarks/bench_backends.py [--cells 1600] [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from nonlocal_lwr import backend
from nonlocal_lwr.convolution import compute_weights
from nonlocal_lwr.core import make_kernel


def time_call(fn, *args, repeat: int, inner: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def bench_kernels(name: str, n_cells: int, repeat: int) -> dict[str, float]:
    k = backend.get_kernels(name)
    rng = np.random.default_rng(7)
    rho = rng.uniform(0.0, 1.0, n_cells)
    kern = make_kernel("poly2", 0.2)
    dx = 4.0 / n_cells
    gamma = compute_weights(kern, dx).gamma
    v = np.full(n_cells + 1, 1.5)
    conv = k.conv_boundaries(rho, gamma)
    inner = max(1, 200_000 // n_cells)
    return {
        "conv_boundaries": time_call(k.conv_boundaries, rho, gamma, repeat=repeat, inner=inner),
        "upwind_step": time_call(k.upwind_step, rho, conv, v, 0.2, 0.05, repeat=repeat, inner=inner),
        "godunov_step": time_call(k.godunov_step, rho, v, v, 0.2, repeat=repeat, inner=inner),
    }


def bench_run(name: str) -> float:
    import importlib
    import os

    os.environ["NONLOCAL_LWR_BACKEND"] = name
    import nonlocal_lwr.backend as b

    importlib.reload(b)
    import nonlocal_lwr.convolution as conv_mod
    import nonlocal_lwr.solver as solver_mod
    import nonlocal_lwr.presets as presets_mod

    importlib.reload(conv_mod)
    importlib.reload(solver_mod)
    importlib.reload(presets_mod)
    scn = presets_mod.inregime_riemann_scenario(dx=0.0025)
    t0 = time.perf_counter()
    solver_mod.run(scn, snapshot_times=[0.0, scn.t_end])
    return time.perf_counter() - t0


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, default=1600)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    names = backend.available_backends()
    print(f"backends available: {names}")
    results = {n: bench_kernels(n, args.cells, args.repeat) for n in names}

    print(f"\nper-call kernel timings, n_cells={args.cells} (microseconds):")
    header = f"{'kernel':<18}" + "".join(f"{n:>12}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for key in results[names[0]]:
        row = f"{key:<18}"
        vals = [results[n][key] for n in names]
        row += "".join(f"{v * 1e6:>12.2f}" for v in vals)
        if len(vals) == 2:
            row += f"{vals[1] / vals[0]:>9.2f}x"
        print(row)

    print("\nfull preset run (dx=0.0025, t_end=0.5):")
    for n in names:
        print(f"  {n:<8} {bench_run(n):.3f} s")


if __name__ == "__main__":
    main()
