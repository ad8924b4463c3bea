"""Compare the numba and numpy backends on the package's hot loops.

Run without arguments to time both backends (each in a subprocess, since
the backend choice is frozen at import) and print a comparison table:

    python benchmarks/bench_backends.py

``--backend numba|numpy`` times a single backend in-process and
``--json`` emits machine-readable results; the orchestrator uses both.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

WORKLOADS = ("scaled_k0", "mfs_assembly", "galerkin_assembly", "scalar_convolution")


def _build_cases():
    from cqscat.assembly import ConvolutionOperator, GalerkinDiscretization, MfsDiscretization
    from cqscat.cq import MultistepRule, TimeGrid, apply_convolution, contour_points, scalar_weights_fft
    from cqscat.geometry import ScattererShape, disk_boundary, mfs_points, panel_mesh
    from cqscat.kernels import bessel_k0_scaled

    grid = TimeGrid.from_horizon(512, 10.0)
    zeta = contour_points(grid)[64]

    mfs = MfsDiscretization(mfs_points(ScattererShape.DISK, 200, 100, 0.9))
    mfs_op = ConvolutionOperator(
        block=mfs.system_block,
        rule=MultistepRule.BDF2,
        grid=grid,
        shifts=mfs.system_shifts(grid.dt),
    )

    gal = GalerkinDiscretization(panel_mesh(disk_boundary(), 100))
    gal_op = ConvolutionOperator(
        block=gal.system_block,
        rule=MultistepRule.BDF2,
        grid=grid,
        shifts=gal.system_shifts(grid.dt),
    )

    rng = np.random.default_rng(3)
    z = rng.uniform(0.0, 60.0, 200_000) + 1j * rng.uniform(-60.0, 60.0, 200_000)
    conv_grid = TimeGrid.from_horizon(4096, 10.0)
    w = scalar_weights_fft(lambda s: 1.0 / s, MultistepRule.BDF2, conv_grid)
    g = np.sin(conv_grid.times())

    return {
        "scaled_k0": (lambda: bessel_k0_scaled(z), 5),
        "mfs_assembly": (lambda: mfs_op.at_contour_point(zeta), 20),
        "galerkin_assembly": (lambda: gal_op.at_contour_point(zeta), 3),
        "scalar_convolution": (lambda: apply_convolution(w, g), 5),
    }


def time_backend():
    from cqscat._backend import active_backend

    cases = _build_cases()
    results = {"backend": active_backend()}
    for name in WORKLOADS:
        fn, reps = cases[name]
        fn()  # warm caches and jit compilation before timing
        best = min(
            (lambda t0: (fn(), time.perf_counter() - t0)[1])(time.perf_counter())
            for _ in range(reps)
        )
        results[name] = best
    return results


def run_both():
    rows = {}
    for backend in ("numba", "numpy"):
        env = dict(os.environ, CQSCAT_BACKEND=backend)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--backend", backend, "--json"],
            env=env,
            capture_output=True,
            text=True,
            check=True,
        )
        rows[backend] = json.loads(out.stdout)
    print(f"{'workload':<20} {'numba [s]':>12} {'numpy [s]':>12} {'speedup':>9}")
    for name in WORKLOADS:
        tn, tp = rows["numba"][name], rows["numpy"][name]
        print(f"{name:<20} {tn:>12.4f} {tp:>12.4f} {tp / tn:>8.1f}x")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--backend", choices=("numba", "numpy"), default=None)
    parser.add_argument("--json", action="store_true")
    args = parser.parse_args(argv)
    if args.backend is None:
        run_both()
        return 0
    os.environ.setdefault("CQSCAT_BACKEND", args.backend)
    results = time_backend()
    if results["backend"] != args.backend:
        raise SystemExit(f"requested {args.backend} but {results['backend']} is active")
    if args.json:
        print(json.dumps(results))
    else:
        for name in WORKLOADS:
            print(f"{name:<20} {results[name]:.4f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
