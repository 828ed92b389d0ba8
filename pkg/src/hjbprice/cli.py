"""Command-line interface: ``price``, ``bench`` and ``check``.

Exit codes: 0 success, 1 a property check failed (``check`` only),
2 configuration error, 3 numerical failure, 4 utility-domain violation.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .bench import format_bench_csv, run_bench, time_ratios
from .config import RunConfig, load_config
from .errors import ConfigError, NumericalError, UtilityDomainError
from .grid import Mesh3D, build_mesh
from .mc import buy_and_hold_utility
from .model import Family
from .pricing import PriceSurface, check_closed_form_bound, complementarity, indifference_price
from .solver import NonConvergenceWarning, SolveReport, ValueField, solve

__all__ = ["main", "run_price", "run_checks", "PriceRun", "write_price_csv"]

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_DOMAIN = 0, 1, 2, 3, 4
DEFAULT_SLICE = (0.467, 33.3)
CSV_HEADER = "S,price,bs_bound,script_v0,script_vdelta"

log = logging.getLogger("hjbprice")


@dataclass
class PriceRun:
    cfg: RunConfig
    mesh: Mesh3D
    v0: ValueField
    vdelta: ValueField
    report0: SolveReport
    report_delta: SolveReport
    surface: PriceSurface
    warnings: list[str]


def _solve_pair(cfg: RunConfig) -> PriceRun:
    mesh = build_mesh(cfg.grid, cfg.params)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NonConvergenceWarning)
        v0, r0 = solve(mesh, cfg.params, cfg.numerics, cfg.utility, delta=0)
        vd, rd = solve(mesh, cfg.params, cfg.numerics, cfg.utility)
    surface = indifference_price(v0, vd, cfg.utility, cfg.params, mesh)
    return PriceRun(cfg, mesh, v0, vd, r0, rd, surface, [str(w.message) for w in caught])


def _fmt(x: float) -> str:
    return format(float(x) + 0.0, ".17g")  # + 0.0 maps -0.0 to 0.0


def write_price_csv(path: Path, run: PriceRun, i: int, j: int) -> None:
    s = run.surface
    rows = [CSV_HEADER]
    for k, S in enumerate(run.mesh.prices):
        rows.append(",".join(_fmt(x) for x in (S, s.price[i, j, k], s.bs_bound[k],
                                               s.script_v0[i, j, k], s.script_vdelta[i, j, k])))
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def run_checks(run: PriceRun, i: int, j: int) -> list[CheckResult]:
    cfg, mesh = run.cfg, run.mesh
    p, u = cfg.params, cfg.utility
    out = []
    d = p.delta
    if d != 0:
        lo, hi = (run.vdelta.values, run.v0.values) if d < 0 else (run.v0.values, run.vdelta.values)
        sol = mesh.solvent
        slack = 1e-8 * max(float(np.max(np.abs(lo[sol]))), float(np.max(np.abs(hi[sol]))))
        worst = float(np.max(lo[sol] - hi[sol]))
        out.append(CheckResult("delta_monotonicity", worst <= slack,
                               f"max(lower - upper) = {worst:.3e}, slack {slack:.3e}"))
    if u.family in (Family.LINEAR, Family.EXPONENTIAL):
        rep = check_closed_form_bound(run.surface, p, mesh, u)
        out.append(CheckResult("closed_form_bound", rep.bound_ok,
                               f"max excess {rep.max_excess:.6g}, violations "
                               f"{rep.n_violations}/{rep.n_nodes}, eps {rep.bound_eps:g}"))
        out.append(CheckResult("beta_independence", rep.beta_ok,
                               f"max deviation {rep.beta_variation:.6g} (no-option field "
                               f"{rep.beta_variation_v0:.6g}), eps {rep.beta_eps:g}"))
    for name, field in (("complementarity_v0", run.v0), ("complementarity_vdelta", run.vdelta)):
        c = complementarity(field, mesh, p, cfg.numerics)
        out.append(CheckResult(name, c.fraction_violating == 0.0,
                               f"violating fraction {c.fraction_violating:g}, worst interior "
                               f"{c.worst_residual:.6g}, worst over trade nodes "
                               f"{c.worst_residual_trade:.6g}"))
    curve = run.surface.price[i, j]
    fin = curve[np.isfinite(curve)]
    if d == -1 and p.payoff_kind.value == "call" and fin.size:
        out.append(CheckResult("price_nonnegative", bool(fin.min() >= -1e-6 * p.K),
                               f"min price {fin.min():.6g} on slice"))
        steps = np.diff(fin)
        out.append(CheckResult("price_nondecreasing", bool(steps.min() >= -1e-9 * p.K),
                               f"min increment {steps.min():.3e} on slice"))
    if cfg.mc is not None:
        k = int(np.argmin(np.abs(mesh.prices - p.K)))
        v = float(run.v0.values[i, j, k])
        try:
            mc = buy_and_hold_utility(mesh.alphas[i], mesh.betas[j], mesh.prices[k], p, u, cfg.mc)
        except UtilityDomainError as exc:
            out.append(CheckResult("mc_lower_bound", True, f"skipped: {exc}"))
        else:
            floor = mc.mean - 3 * mc.se - 0.01 * max(1.0, abs(v))
            out.append(CheckResult("mc_lower_bound", v >= floor,
                                   f"v0 {v:.10g} >= {floor:.10g} (mean {mc.mean:.10g}, "
                                   f"se {mc.se:.3e}, {cfg.mc.paths} paths)"))
    return out


def _report_text(run: PriceRun, i: int, j: int, checks: list[CheckResult]) -> str:
    m = run.mesh
    lines = [
        f"backend: {run.report_delta.backend}",
        f"utility: {run.cfg.utility.family.value}",
        f"slice: alpha = {m.alphas[i]:.17g} (i = {i}), beta = {m.betas[j]:.17g} (j = {j})",
        f"grid: {m.shape[0]} x {m.shape[1]} x {m.shape[2]} nodes, {run.cfg.grid.N} time steps",
    ]
    for name, rep in (("no-option field", run.report0), ("option field", run.report_delta)):
        lines.append(f"{name}: converged = {rep.converged}, sweeps per step = {rep.iterations}, "
                     f"max final update = {max(rep.final_tolerances):.3e}")
    for w in run.warnings:
        lines.append(f"warning: {w}")
    for c in checks:
        lines.append(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    return "\n".join(lines) + "\n"


def _slice(run: PriceRun, spec: str | None) -> tuple[int, int]:
    a, b = DEFAULT_SLICE
    if spec:
        try:
            a, b = (float(x) for x in spec.split(","))
        except ValueError:
            raise ConfigError(f"--slice expects 'alpha,beta', got {spec!r}") from None
    return run.mesh.nearest(a, b)


def run_price(cfg: RunConfig, out_dir: Path, slice_spec: str | None = None) -> int:
    run = _solve_pair(cfg)
    i, j = _slice(run, slice_spec)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_price_csv(out_dir / "price_curve.csv", run, i, j)
    checks = run_checks(run, i, j)
    (out_dir / "report.txt").write_text(_report_text(run, i, j, checks), encoding="utf-8")
    return EXIT_OK


def _cmd_price(args) -> int:
    cfg = load_config(args.config)
    code = run_price(cfg, Path(args.out), args.slice)
    print(f"wrote {Path(args.out) / 'price_curve.csv'} and report.txt")
    return code


def _cmd_check(args) -> int:
    cfg = load_config(args.config)
    run = _solve_pair(cfg)
    i, j = _slice(run, args.slice)
    checks = run_checks(run, i, j)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK_FAILED


def _cmd_bench(args) -> int:
    cfg = load_config(args.config)
    try:
        factors = tuple(int(x) for x in args.scale_dims.split(","))
        if len(factors) != 3 or min(factors) < 1:
            raise ValueError
    except ValueError:
        raise ConfigError(f"--scale-dims expects three positive integers S,alpha,beta, "
                          f"got {args.scale_dims!r}") from None
    rows = run_bench(cfg, factors, sweeps=args.sweeps, repeats=args.repeats)
    text = format_bench_csv(rows)
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "bench.csv").write_text(text, encoding="utf-8")
    for label, ratio in time_ratios(rows).items():
        print(f"# {label}: time ratio {ratio:.3f}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hjbprice", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("price", help="solve and write price_curve.csv and report.txt")
    p.add_argument("--config", required=True)
    p.add_argument("--slice", help="alpha,beta of the curve (nearest grid node)")
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_price)
    b = sub.add_parser("bench", help="wall-time scaling in the grid dimensions")
    b.add_argument("--config", required=True)
    b.add_argument("--scale-dims", default="2,2,2", help="factors for N_S,N_alpha,N_beta")
    b.add_argument("--sweeps", type=int, default=5, help="policy sweeps per time step")
    b.add_argument("--repeats", type=int, default=5)
    b.add_argument("--out")
    b.set_defaults(func=_cmd_bench)
    c = sub.add_parser("check", help="run the property checks only")
    c.add_argument("--config", required=True)
    c.add_argument("--slice")
    c.set_defaults(func=_cmd_check)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    log.debug("sweep backend: %s", kernels.BACKEND)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UtilityDomainError as exc:
        print(f"utility domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (NumericalError, FloatingPointError, ZeroDivisionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
