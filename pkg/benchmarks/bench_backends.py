"""Compare the compiled and pure-numpy sweep kernels.

Usage: python3 benchmarks/bench_backends.py [--repeats 5] [--sweeps 5]

Times a fixed number of policy sweeps per step on a few grid sizes with
each available backend, checks that both produce identical fields and
prints a table of timings and speed-ups.
"""

from __future__ import annotations

import argparse
import statistics
import time
import warnings
from dataclasses import replace

import numpy as np

from hjbprice import kernels
from hjbprice.discretization import NumericalParams
from hjbprice.grid import GridSpec, build_mesh
from hjbprice.model import ModelParams, UtilityFunction
from hjbprice.solver import NonConvergenceWarning, solve

GRIDS = [
    GridSpec(N_alpha=6, N_beta=6, N_S=100, N=10),
    GridSpec(N_alpha=16, N_beta=16, N_S=400, N=4),
    GridSpec(N_alpha=32, N_beta=32, N_S=400, N=2),
]


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--sweeps", type=int, default=5)
    args = ap.parse_args(argv)

    params = ModelParams()
    u = UtilityFunction.exponential(0.1)
    numerics = replace(NumericalParams(), tol_max=0.0, p_max=args.sweeps)
    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'cells':>9} {'steps':>5} " + " ".join(f"{b + ' [ms]':>15}" for b in backends) + "  speed-up")
    warnings.simplefilter("ignore", NonConvergenceWarning)
    for spec in GRIDS:
        mesh = build_mesh(spec, params)
        times = {}
        fields = {}
        for b in backends:
            samples = []
            for _ in range(args.repeats):
                t0 = time.perf_counter()
                V, _ = solve(mesh, params, numerics, u, backend=b)
                samples.append(time.perf_counter() - t0)
            times[b] = statistics.median(samples)
            fields[b] = V.values
        same = all(np.array_equal(fields[backends[0]], f, equal_nan=True) for f in fields.values())
        speed = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        print(f"{mesh.size:>9} {spec.N:>5} " + " ".join(f"{times[b] * 1e3:>15.2f}" for b in backends)
              + f"  {speed:8.2f}x" + ("" if same else "  FIELDS DIFFER"))


if __name__ == "__main__":
    main()
