"""Certainty equivalents, indifference prices and checks on the recovered
option-value field.

The value function is written as v = U(e^{mu tau}(w + A(beta, t) + F)); the
recovered field ``F`` (``script_v`` below) isolates the option's contribution
and is compared against the closed-form Black-Scholes value with rate mu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discretization import NumericalParams, build_stencil, operator_fields, trade_operators
from .grid import Mesh3D
from .model import Family, ModelParams, UtilityFunction, bs_closed_form, shift_A
from .solver import ValueField

__all__ = [
    "PriceSurface",
    "BoundReport",
    "ComplementarityReport",
    "certainty_equivalent",
    "indifference_price",
    "recover_script_v",
    "interior_mask",
    "check_closed_form_bound",
    "complementarity",
]


@dataclass
class PriceSurface:
    price: np.ndarray
    v0: ValueField
    vdelta: ValueField
    script_v0: np.ndarray | None
    script_vdelta: np.ndarray | None
    bs_bound: np.ndarray  # closed-form value of the delta position at t, per S node
    t: float = 0.0

    def slice(self, i: int, j: int) -> dict[str, np.ndarray]:
        out = {"price": self.price[i, j], "bs_bound": self.bs_bound}
        if self.script_v0 is not None:
            out["script_v0"] = self.script_v0[i, j]
            out["script_vdelta"] = self.script_vdelta[i, j]
        return out


def _inverse_where_finite(u: UtilityFunction, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    ok = np.isfinite(v)
    out = np.full(v.shape, np.nan)
    out[ok] = u.inverse(v[ok])
    return out


def certainty_equivalent(v_value, w, u: UtilityFunction):
    """Cash amount z with U(w - z) = v, i.e. w - U^{-1}(v)."""
    res = np.asarray(w, dtype=float) - np.asarray(u.inverse(v_value))
    return float(res) if res.ndim == 0 else res


def recover_script_v(v: ValueField | np.ndarray, mesh: Mesh3D, params: ModelParams,
                     u: UtilityFunction, t: float = 0.0) -> np.ndarray:
    """e^{-mu tau} U^{-1}(v) - w - A(beta, t); NaN where ``v`` is NaN."""
    values = v.values if isinstance(v, ValueField) else np.asarray(v, dtype=float)
    tau = params.T - t
    a_shift = np.asarray(shift_A(mesh.betas, t, params))[None, :, None]
    return math.exp(-params.mu * tau) * _inverse_where_finite(u, values) - mesh.wealth() - a_shift


def indifference_price(v0: ValueField, vdelta: ValueField, u: UtilityFunction,
                       params: ModelParams, mesh: Mesh3D | None = None,
                       t: float = 0.0) -> PriceSurface:
    """e^{-r(T-t)} (U^{-1}(v0) - U^{-1}(vdelta)) nodewise."""
    if v0.values.shape != vdelta.values.shape or v0.time_index != vdelta.time_index:
        raise ValueError("fields must live on the same mesh and time level")
    z = _inverse_where_finite(u, v0.values) - _inverse_where_finite(u, vdelta.values)
    price = math.exp(-params.r * (params.T - t)) * z
    sv0 = svd = None
    bs = np.array([])
    if mesh is not None:
        sv0 = recover_script_v(v0, mesh, params, u, t)
        svd = recover_script_v(vdelta, mesh, params, u, t)
        bs = np.asarray(bs_closed_form(mesh.prices, t, params.with_(delta=vdelta.delta)), dtype=float)
    return PriceSurface(price=price, v0=v0, vdelta=vdelta, script_v0=sv0, script_vdelta=svd,
                        bs_bound=bs, t=t)


def interior_mask(mesh: Mesh3D, layers: int = 2) -> np.ndarray:
    """Interior nodes at least ``layers`` index steps from every box face."""
    m = mesh.interior.copy()
    if layers > 0:
        for ax in range(3):
            sl = [slice(None)] * 3
            sl[ax] = slice(0, layers)
            m[tuple(sl)] = False
            sl[ax] = slice(-layers, None)
            m[tuple(sl)] = False
    return m


def beta_variation(field: np.ndarray, mask: np.ndarray) -> float:
    """max over masked nodes of |F - mean over beta of F| (mean per (alpha, S) column)."""
    X = np.where(mask, field, np.nan)
    cnt = mask.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore"):
        mean = np.where(cnt > 0, np.nansum(np.where(mask, field, 0.0), axis=1, keepdims=True)
                        / np.maximum(cnt, 1), np.nan)
        dev = np.abs(X - mean)
    return float(np.nanmax(dev)) if mask.any() else 0.0


@dataclass
class BoundReport:
    max_excess: float          # max of (F_delta - V_BS) over checked nodes
    n_violations: int          # nodes with F_delta > V_BS + bound_eps
    n_nodes: int
    beta_variation: float      # of F_delta
    beta_variation_v0: float   # of F_0, informational
    difference_deviation: float  # max |(F_delta - F_0) - V_BS|
    bound_eps: float
    beta_eps: float

    @property
    def bound_ok(self) -> bool:
        return self.n_violations == 0

    @property
    def beta_ok(self) -> bool:
        return self.beta_variation <= self.beta_eps

    @property
    def passed(self) -> bool:
        return self.bound_ok and self.beta_ok


def check_closed_form_bound(surface: PriceSurface, params: ModelParams, mesh: Mesh3D,
                u: UtilityFunction | None = None, bound_eps: float | None = None,
                beta_eps: float | None = None, layers: int = 2) -> BoundReport:
    """Upper bound by the closed form and beta-independence of the recovered field.

    For linear utility the recovered field also carries the gain from the
    stock position itself, which is the same with and without the option;
    the bound is then checked on the difference F_delta - F_0.
    """
    if u is not None and u.family not in (Family.LINEAR, Family.EXPONENTIAL):
        raise ValueError("the bound holds for linear and exponential utility only")
    if surface.script_vdelta is None:
        raise ValueError("surface was built without a mesh")
    bound_eps = 0.005 * params.K if bound_eps is None else bound_eps
    beta_eps = 0.01 * params.K if beta_eps is None else beta_eps
    mask = interior_mask(mesh, layers)
    bs = surface.bs_bound[None, None, :]
    checked = surface.script_vdelta
    if u is not None and u.family is Family.LINEAR:
        checked = surface.script_vdelta - surface.script_v0
    excess = np.where(mask, checked - bs, -np.inf)
    diff = np.where(mask, np.abs(surface.script_vdelta - surface.script_v0 - bs), 0.0)
    return BoundReport(
        max_excess=float(excess.max()) if mask.any() else -math.inf,
        n_violations=int(np.sum(excess > bound_eps)),
        n_nodes=int(mask.sum()),
        beta_variation=beta_variation(surface.script_vdelta, mask),
        beta_variation_v0=beta_variation(surface.script_v0, mask),
        difference_deviation=float(diff.max()) if mask.any() else 0.0,
        bound_eps=bound_eps, beta_eps=beta_eps)


@dataclass
class ComplementarityReport:
    worst_residual: float        # max(0, -L_B, -L_C) over interior nodes
    worst_residual_trade: float  # same over every node where a trade is enabled
    threshold_B: float
    threshold_C: float
    fraction_violating: float    # interior nodes below -c / lambda
    n_nodes: int


def complementarity(V: ValueField | np.ndarray, mesh: Mesh3D, params: ModelParams,
                    numerics: NumericalParams) -> ComplementarityReport:
    """Penalty residual of the trade operators, c = max(1, |V|_inf over solvent nodes)."""
    values = V.values if isinstance(V, ValueField) else np.asarray(V, dtype=float)
    ops = operator_fields(values, mesh, params)
    mask = mesh.interior
    c = max(1.0, float(np.max(np.abs(values[mesh.solvent]))))
    lb, lc = numerics.lambda_B, numerics.lambda_C
    tb = c / lb if lb > 0 else math.inf
    tc = c / lc if lc > 0 else math.inf
    LB, LC = ops["LB"][mask], ops["LC"][mask]
    viol = (LB < -tb) | (LC < -tc)
    worst = float(np.max(np.maximum(0.0, np.maximum(-LB, -LC)), initial=0.0))
    TB, TC = trade_operators(values, build_stencil(mesh, params, numerics))
    with np.errstate(invalid="ignore"):
        neg = np.fmax(np.fmax(-TB, -TC), 0.0)
    worst_trade = float(np.nanmax(neg)) if np.isfinite(neg).any() else 0.0
    n = int(mask.sum())
    return ComplementarityReport(worst_residual=worst, worst_residual_trade=worst_trade,
                                 threshold_B=tb, threshold_C=tc,
                                 fraction_violating=float(viol.mean()) if n else 0.0, n_nodes=n)
