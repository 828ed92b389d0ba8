"""Wall-time scaling of the solver in the grid dimensions.

Each run uses a fixed number of policy sweeps per time step (``tol_max = 0``)
so that timings measure cost per sweep rather than convergence behaviour.
"""

from __future__ import annotations

import statistics
import time
import warnings
from dataclasses import dataclass, replace

from .config import RunConfig
from .grid import GridSpec, build_mesh
from .solver import NonConvergenceWarning, solve

__all__ = ["BenchRow", "time_grids", "scaling_grids", "run_bench", "time_ratios", "format_bench_csv"]


@dataclass(frozen=True)
class BenchRow:
    label: str
    grid: GridSpec
    cells: int
    samples: tuple[float, ...]  # wall time of each repeat
    sweeps: int

    @property
    def seconds(self) -> float:
        return statistics.median(self.samples)

    @property
    def seconds_per_cell_per_iter(self) -> float:
        return self.seconds / (self.cells * self.sweeps)


def _timed_solve(cfg: RunConfig, mesh, numerics, backend) -> tuple[float, int]:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConvergenceWarning)
        t0 = time.perf_counter()
        _, rep = solve(mesh, cfg.params, numerics, cfg.utility, backend=backend)
        return time.perf_counter() - t0, rep.total_iterations


def time_grids(cfg: RunConfig, grids: list[tuple[str, GridSpec]], sweeps: int = 5,
               repeats: int = 5, backend: str | None = None) -> list[BenchRow]:
    """Time each grid ``repeats`` times, interleaving grids within every round
    so slow drifts in machine load affect all of them alike."""
    numerics = replace(cfg.numerics, tol_max=0.0, p_max=sweeps)
    meshes = [build_mesh(g, cfg.params) for _, g in grids]
    for mesh in meshes:  # warm-up
        _timed_solve(cfg, mesh, numerics, backend)
    samples: list[list[float]] = [[] for _ in grids]
    totals = [0] * len(grids)
    for _ in range(repeats):
        for n, mesh in enumerate(meshes):
            sec, totals[n] = _timed_solve(cfg, mesh, numerics, backend)
            samples[n].append(sec)
    return [BenchRow(label=label, grid=g, cells=mesh.size, samples=tuple(ts), sweeps=tot)
            for (label, g), mesh, ts, tot in zip(grids, meshes, samples, totals)]


def scaling_grids(base: GridSpec, factors: tuple[int, int, int]) -> list[tuple[str, GridSpec]]:
    """Base grid, then each of (N_S, N_alpha, N_beta) scaled by its factor alone."""
    grids = [("base", base)]
    for name, f in zip(("N_S", "N_alpha", "N_beta"), factors):
        if f != 1:
            grids.append((f"{name}x{f}", base.scaled(**{name: f})))
    return grids


def run_bench(cfg: RunConfig, factors: tuple[int, int, int] = (2, 2, 2), sweeps: int = 5,
              repeats: int = 5, backend: str | None = None) -> list[BenchRow]:
    return time_grids(cfg, scaling_grids(cfg.grid, factors), sweeps, repeats, backend)


def time_ratios(rows: list[BenchRow]) -> dict[str, float]:
    """Median over rounds of each row's time relative to the first row."""
    base = rows[0].samples
    return {r.label: statistics.median(t / b for t, b in zip(r.samples, base)) for r in rows[1:]}


def format_bench_csv(rows: list[BenchRow]) -> str:
    out = ["cells,seconds,seconds_per_cell_per_iter"]
    out += [f"{r.cells},{r.seconds:.17g},{r.seconds_per_cell_per_iter:.17g}" for r in rows]
    return "\n".join(out) + "\n"
