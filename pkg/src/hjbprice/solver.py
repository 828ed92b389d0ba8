"""Backward time stepping with an inner penalty policy iteration.

Each time step starts from the converged field of the next level and
repeats sweeps (policy update, block assembly, batched Thomas solves) until
the sup-norm update falls below ``tol_max * max(1, |V^{n+1}|_inf)`` or
``p_max`` sweeps have run.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .discretization import (BoundaryData, Closure, NumericalParams, Stencil, _shifted,
                             build_stencil)
from .errors import NumericalError, UtilityDomainError
from .grid import Mesh3D
from .model import ModelParams, UtilityFunction, bs_closed_form, payoff, shift_A

__all__ = [
    "NumericalParams",
    "Closure",
    "BoundaryData",
    "ValueField",
    "StepReport",
    "SolveReport",
    "NonConvergenceWarning",
    "terminal_condition",
    "boundary_condition",
    "referenced_nodes",
    "step_backward",
    "solve",
]

log = logging.getLogger(__name__)


class NonConvergenceWarning(RuntimeWarning):
    """Policy iteration hit ``p_max`` with an update above ``tol_warn``."""


@dataclass
class ValueField:
    """Discrete value function at time level ``time_index``.

    Nodes that are never read by the scheme and lie outside the utility's
    domain hold NaN; every other entry is finite.
    """

    values: np.ndarray
    time_index: int
    delta: int = 0

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float)


@dataclass
class StepReport:
    time_index: int
    iterations: int
    tol: float
    threshold: float
    converged: bool


@dataclass
class SolveReport:
    steps: list[StepReport] = field(default_factory=list)
    wall_time: float = 0.0
    backend: str = ""

    @property
    def iterations(self) -> list[int]:
        return [s.iterations for s in self.steps]

    @property
    def final_tolerances(self) -> list[float]:
        return [s.tol for s in self.steps]

    @property
    def converged(self) -> bool:
        return all(s.converged for s in self.steps)

    @property
    def total_iterations(self) -> int:
        return sum(self.iterations)


def _utility_on(u: UtilityFunction, xi: np.ndarray, check: np.ndarray) -> np.ndarray:
    """U(xi) where defined, NaN elsewhere; raises if any ``check`` node is out of domain."""
    ok = u.in_domain(xi)
    bad = check & ~ok
    if bad.any():
        node = tuple(int(x) for x in np.argwhere(bad)[0])
        raise UtilityDomainError(
            f"{u.family.value} utility evaluated at {float(xi[node])!r}, outside its domain",
            value=float(xi[node]), node=node)
    out = np.full(xi.shape, np.nan)
    out[ok] = u(xi[ok])
    return out


def referenced_nodes(stencil: Stencil) -> np.ndarray:
    """Nodes whose values enter some unknown's equation, plus all solvent nodes."""
    unk = stencil.unknown == 1
    ref = unk | stencil.mesh.solvent
    ref |= _shifted(unk, 2, -1) | _shifted(unk, 2, 1)
    up = unk & (stencil.rup != 0)[None, :, None]
    lo = unk & (stencil.rlo != 0)[None, :, None]
    ref |= _shifted(up, 1, -1) | _shifted(lo, 1, 1)
    buy = stencil.buy_ok == 1
    sell = stencil.sell_ok == 1
    ref |= _shifted(buy, 0, -1) | _shifted(buy, 1, 1)
    ref |= _shifted(sell, 0, 1) | _shifted(sell, 1, -1)
    return ref


def _terminal_argument(mesh: Mesh3D, params: ModelParams) -> np.ndarray:
    return mesh.wealth() + params.delta * np.asarray(payoff(mesh.prices, params))[None, None, :]


def terminal_condition(mesh: Mesh3D, params: ModelParams, u: UtilityFunction,
                       check: np.ndarray | None = None) -> ValueField:
    """U(w + delta C_T) at every node; out-of-domain values are errors on ``check`` nodes
    (default: solvent nodes)."""
    check = mesh.solvent if check is None else check
    return ValueField(_utility_on(u, _terminal_argument(mesh, params), check),
                      time_index=mesh.spec.N, delta=params.delta)


def boundary_condition(mesh: Mesh3D, params: ModelParams, u: UtilityFunction, n: int,
                       numerics: NumericalParams | None = None,
                       check: np.ndarray | None = None) -> np.ndarray:
    """Values imposed on fixed nodes at time level ``n`` (full mesh shape).

    Far-field data are the no-trade closed form
    U(e^{mu tau}(w + A(beta, t) + V_BS(S, t))); terminal data are U(w + delta C_T).
    """
    numerics = numerics or NumericalParams()
    check = mesh.solvent if check is None else check
    if not 0 <= n <= mesh.spec.N:
        raise IndexError(f"time level {n} outside 0..{mesh.spec.N}")
    if numerics.boundary_data is BoundaryData.TERMINAL or n == mesh.spec.N:
        xi = _terminal_argument(mesh, params)
    else:
        t = n * mesh.dt
        tau = params.T - t
        a_shift = np.asarray(shift_A(mesh.betas, t, params))[None, :, None]
        bs = np.asarray(bs_closed_form(mesh.prices, t, params))[None, None, :]
        xi = math.exp(params.mu * tau) * (mesh.wealth() + a_shift + bs)
    return _utility_on(u, xi, check)


def step_backward(V_next: ValueField, mesh: Mesh3D, params: ModelParams,
                  numerics: NumericalParams, u: UtilityFunction, *,
                  stencil: Stencil | None = None, fixed_values: np.ndarray | None = None,
                  backend: str | None = None) -> tuple[ValueField, StepReport]:
    """Advance from level ``n+1`` to ``n`` by policy iteration."""
    st = stencil or build_stencil(mesh, params, numerics)
    n = V_next.time_index - 1
    if n < 0:
        raise ValueError("cannot step below time level 0")
    if fixed_values is None:
        fixed_values = boundary_condition(mesh, params, u, n, numerics, check=referenced_nodes(st))
    sweep = kernels.get_backend(backend)
    unk = st.unknown == 1
    Vn1 = V_next.values
    G = np.ascontiguousarray(fixed_values, dtype=float)
    V = np.ascontiguousarray(np.where(unk, Vn1, G))
    out = np.empty_like(V)
    with np.errstate(invalid="ignore"):
        scale = max(1.0, float(np.max(np.abs(Vn1[mesh.solvent]), initial=0.0)))
    threshold = numerics.tol_max * scale
    tol = math.inf
    p = 0
    for p in range(1, numerics.p_max + 1):
        tol = sweep(V, Vn1, G, st.unknown, st.buy_ok, st.sell_ok, st.sub, st.sup, st.cbb,
                    st.ccb, st.rup, st.rlo, st.dbase, st.inv_ha, st.dt_lam_B, st.dt_lam_C, out)
        if tol < 0:
            raise NumericalError(f"zero pivot in a block solve at time level {n}")
        if not np.all(np.isfinite(out[unk])):
            raise NumericalError(f"non-finite values at time level {n}, sweep {p}")
        V, out = out, V
        if tol < threshold:
            break
    converged = tol < threshold
    if not converged and tol > numerics.tol_warn:
        warnings.warn(f"policy iteration at level {n} stopped after {p} sweeps with "
                      f"update {tol:.3e}", NonConvergenceWarning, stacklevel=2)
    log.debug("level %d: %d sweeps, tol %.3e", n, p, tol)
    return (ValueField(V, time_index=n, delta=V_next.delta),
            StepReport(time_index=n, iterations=p, tol=float(tol), threshold=threshold,
                       converged=converged))


def solve(mesh: Mesh3D, params: ModelParams, numerics: NumericalParams, u: UtilityFunction,
          delta: int | None = None, *, backend: str | None = None,
          history: list | None = None) -> tuple[ValueField, SolveReport]:
    """March from maturity to ``t = 0``; returns the field at level 0.

    ``delta`` overrides ``params.delta``.  When ``numerics.keep_history`` is
    set and ``history`` is a list, intermediate fields are appended to it.
    """
    if delta is not None:
        params = params.with_(delta=delta)
    t0 = time.perf_counter()
    st = build_stencil(mesh, params, numerics)
    ref = referenced_nodes(st)
    V = terminal_condition(mesh, params, u, check=ref)
    report = SolveReport(backend=backend or kernels.BACKEND)
    keep = numerics.keep_history and history is not None
    if keep:
        history.append(V)
    for n in range(mesh.spec.N - 1, -1, -1):
        G = boundary_condition(mesh, params, u, n, numerics, check=ref)
        V, rep = step_backward(V, mesh, params, numerics, u, stencil=st, fixed_values=G,
                               backend=backend)
        report.steps.append(rep)
        if keep:
            history.append(V)
    report.wall_time = time.perf_counter() - t0
    return V, report
