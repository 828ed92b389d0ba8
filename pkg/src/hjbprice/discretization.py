"""Upwind finite-difference operators, the penalty switch and per-block
assembly of the tridiagonal systems solved in each policy iteration.

Row ``k`` of block ``(i, j)`` reads, with ``dt``-scaled coefficients,

    diag * V[i,j,k] - sub_k * V[i,j,k-1] - sup_k * V[i,j,k+1]
        = V_next[i,j,k] + (beta-drift and penalty couplings at the previous iterate)

Only the S direction is implicit.  The alpha and beta neighbours (interest
drift and trading) are lagged to the previous policy iterate; the diagonal
share of the penalty terms stays implicit so the iteration contracts.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ContractViolation
from .grid import Mesh3D
from .model import ModelParams

__all__ = [
    "Closure",
    "BoundaryData",
    "NumericalParams",
    "PenaltyPolicy",
    "TridiagonalSystem",
    "Stencil",
    "build_stencil",
    "apply_LA",
    "apply_LB",
    "apply_LC",
    "operator_fields",
    "penalty_switch",
    "compute_policy",
    "assemble_block",
]


class Closure(str, Enum):
    """How stencils that leave the admissible box are closed.

    ``STATE_CONSTRAINT``: every solvent node off the S faces is an unknown;
    a buy (sell) is disabled at nodes whose buy (sell) neighbours are off
    the grid or insolvent, and interest drift off the grid is dropped.
    ``DIRICHLET``: all box faces and insolvent-adjacent nodes carry
    Dirichlet data; only interior nodes are unknowns.
    """

    STATE_CONSTRAINT = "state_constraint"
    DIRICHLET = "dirichlet"


class BoundaryData(str, Enum):
    """Values imposed on fixed nodes.

    ``FAR_FIELD``: U(e^{mu tau}(w + A + V_BS)), the no-trade closed form,
    which equals U(w + delta C_T) at maturity.  ``TERMINAL``: the
    time-independent U(w + delta C_T).
    """

    FAR_FIELD = "far_field"
    TERMINAL = "terminal"


@dataclass(frozen=True)
class NumericalParams:
    lambda_B: float = 10.0
    lambda_C: float = 10.0
    tol_max: float = 1e-8  # relative to max(1, |V^{n+1}|_inf)
    p_max: int = 50
    tol_warn: float = 1e-4
    closure: Closure = Closure.STATE_CONSTRAINT
    boundary_data: BoundaryData = BoundaryData.FAR_FIELD
    keep_history: bool = False

    def __post_init__(self):
        from .errors import ConfigError
        object.__setattr__(self, "closure", Closure(self.closure))
        object.__setattr__(self, "boundary_data", BoundaryData(self.boundary_data))
        if self.lambda_B < 0 or self.lambda_C < 0:
            raise ConfigError("penalty parameters must be non-negative")
        if self.tol_max < 0:
            raise ConfigError("tol_max must be non-negative")
        if int(self.p_max) != self.p_max or self.p_max < 1:
            raise ConfigError(f"p_max must be a positive integer, got {self.p_max}")


@dataclass
class PenaltyPolicy:
    m_tilde: np.ndarray
    n_tilde: np.ndarray
    lambda_B: float
    lambda_C: float


@dataclass
class TridiagonalSystem:
    """``lower[k-1]`` couples row k to x[k-1]; ``upper[k]`` couples row k to x[k+1]."""

    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        n = len(self.diag)
        if len(self.lower) != n - 1 or len(self.upper) != n - 1 or len(self.rhs) != n:
            raise ValueError("inconsistent tridiagonal system sizes")

    @property
    def n(self) -> int:
        return len(self.diag)

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.lower, -1) + np.diag(self.upper, 1)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[1:] += self.lower * x[:-1]
        y[:-1] += self.upper * x[1:]
        return y


@dataclass(frozen=True, eq=False)
class Stencil:
    """Precomputed coefficients of the scheme on one mesh.

    Arrays are read-only and shared by both kernel backends.
    """

    mesh: Mesh3D
    unknown: np.ndarray   # uint8, shape of the mesh
    buy_ok: np.ndarray    # uint8
    sell_ok: np.ndarray   # uint8
    sub: np.ndarray       # (n_S,) dt * (mu^- S / h- + sigma^2 S^2 / (h- (h+ + h-)))
    sup: np.ndarray       # (n_S,) dt * (mu^+ S / h+ + sigma^2 S^2 / (h+ (h+ + h-)))
    cbb: np.ndarray       # (n_S,) (1 + theta) S / h_beta
    ccb: np.ndarray       # (n_S,) (1 - theta) S / h_beta
    rup: np.ndarray       # (n_beta,) dt r beta^+ / h_beta
    rlo: np.ndarray       # (n_beta,) dt r |beta^-| / h_beta
    dbase: np.ndarray     # (n_beta, n_S) 1 + sub + sup + rup + rlo
    inv_ha: float
    dt: float
    lam_B: float
    lam_C: float

    @property
    def dt_lam_B(self) -> float:
        return self.dt * self.lam_B

    @property
    def dt_lam_C(self) -> float:
        return self.dt * self.lam_C

    @property
    def fixed(self) -> np.ndarray:
        return self.unknown == 0


def _s_steps(prices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    h = np.diff(prices)
    hp = np.empty_like(prices)
    hm = np.empty_like(prices)
    hp[:-1] = h
    hp[-1] = h[-1]
    hm[1:] = h
    hm[0] = h[0]
    return hp, hm


def _shifted(mask: np.ndarray, axis: int, step: int) -> np.ndarray:
    """``out[idx] = mask[idx + step]`` along ``axis``; False off the grid."""
    out = np.zeros_like(mask)
    src = [slice(None)] * mask.ndim
    dst = [slice(None)] * mask.ndim
    if step > 0:
        dst[axis], src[axis] = slice(0, -step), slice(step, None)
    else:
        dst[axis], src[axis] = slice(-step, None), slice(0, step)
    out[tuple(dst)] = mask[tuple(src)]
    return out


def build_stencil(mesh: Mesh3D, params: ModelParams, numerics: NumericalParams) -> Stencil:
    S = mesh.prices
    hp, hm = _s_steps(S)
    dt = mesh.dt
    sig2 = params.sigma ** 2
    # S drift is upwinded by the sign of mu (forward difference for mu > 0)
    sub = dt * (max(-params.mu, 0.0) * S / hm + sig2 * S * S / (hm * (hp + hm)))
    sup = dt * (max(params.mu, 0.0) * S / hp + sig2 * S * S / (hp * (hp + hm)))
    hb = mesh.h_beta
    cbb = (1.0 + params.theta) * S / hb
    ccb = (1.0 - params.theta) * S / hb
    beta = mesh.betas
    rup = dt * params.r * np.maximum(beta, 0.0) / hb
    rlo = dt * params.r * -np.minimum(beta, 0.0) / hb
    rup[-1] = 0.0  # off-grid interest drift
    rlo[0] = 0.0
    if params.r < 0:
        raise ContractViolation("negative interest rates break the upwind sign split")
    dbase = 1.0 + sub[None, :] + sup[None, :] + (rup + rlo)[:, None]

    solvent = mesh.solvent
    if numerics.closure is Closure.DIRICHLET:
        unknown = mesh.interior.copy()
        buy_ok = unknown.copy()
        sell_ok = unknown.copy()
    else:
        unknown = solvent.copy()
        unknown[:, :, 0] = False
        unknown[:, :, -1] = False
        buy_ok = unknown & _shifted(solvent, 0, 1) & _shifted(solvent, 1, -1)
        sell_ok = unknown & _shifted(solvent, 0, -1) & _shifted(solvent, 1, 1)

    arrays = dict(
        unknown=unknown.astype(np.uint8), buy_ok=buy_ok.astype(np.uint8),
        sell_ok=sell_ok.astype(np.uint8), sub=sub, sup=sup, cbb=cbb, ccb=ccb,
        rup=rup, rlo=rlo, dbase=np.ascontiguousarray(dbase))
    for a in arrays.values():
        a.setflags(write=False)
    return Stencil(mesh=mesh, inv_ha=1.0 / mesh.h_alpha, dt=dt,
                   lam_B=float(numerics.lambda_B), lam_C=float(numerics.lambda_C), **arrays)


# -- literal operators -----------------------------------------------------

def _require_interior(mesh: Mesh3D, node):
    i, j, k = node
    mesh.stack_index(i, j, k)
    if not mesh.interior[i, j, k]:
        raise ContractViolation(f"operator evaluated at non-interior node {tuple(node)}")


def apply_LA(V: np.ndarray, V_next: np.ndarray, mesh: Mesh3D, params: ModelParams, node) -> float:
    """No-trade operator at time level n (``V``) given level n+1 (``V_next``)."""
    _require_interior(mesh, node)
    i, j, k = node
    S = mesh.prices
    hp, hm = S[k + 1] - S[k], S[k] - S[k - 1]
    b = mesh.betas[j]
    hb = mesh.h_beta
    v = V[i, j, k]
    d_t = (V_next[i, j, k] - v) / mesh.dt
    d_bp = (V[i, j + 1, k] - v) / hb
    d_bm = (v - V[i, j - 1, k]) / hb
    d_s = (V[i, j, k + 1] - v) / hp if params.mu > 0 else (v - V[i, j, k - 1]) / hm
    d_ss = 2.0 / (hp + hm) * ((V[i, j, k + 1] - v) / hp - (v - V[i, j, k - 1]) / hm)
    return -(d_t + params.r * max(b, 0.0) * d_bp + params.r * min(b, 0.0) * d_bm
             + params.mu * S[k] * d_s + 0.5 * params.sigma ** 2 * S[k] ** 2 * d_ss)


def apply_LB(V: np.ndarray, mesh: Mesh3D, params: ModelParams, node) -> float:
    """Buy operator -D_alpha^+ + (1 + theta) S D_beta^-."""
    _require_interior(mesh, node)
    i, j, k = node
    v = V[i, j, k]
    return (-(V[i + 1, j, k] - v) / mesh.h_alpha
            + (1.0 + params.theta) * mesh.prices[k] * (v - V[i, j - 1, k]) / mesh.h_beta)


def apply_LC(V: np.ndarray, mesh: Mesh3D, params: ModelParams, node) -> float:
    """Sell operator D_alpha^- - (1 - theta) S D_beta^+."""
    _require_interior(mesh, node)
    i, j, k = node
    v = V[i, j, k]
    return ((v - V[i - 1, j, k]) / mesh.h_alpha
            - (1.0 - params.theta) * mesh.prices[k] * (V[i, j + 1, k] - v) / mesh.h_beta)


def operator_fields(V: np.ndarray, mesh: Mesh3D, params: ModelParams,
                    V_next: np.ndarray | None = None) -> dict[str, np.ndarray]:
    """Vectorised L_B, L_C (and L_A when ``V_next`` is given) on interior nodes; NaN elsewhere."""
    inner = (slice(1, -1),) * 3
    c = V[inner]
    ip, im = V[2:, 1:-1, 1:-1], V[:-2, 1:-1, 1:-1]
    jp, jm = V[1:-1, 2:, 1:-1], V[1:-1, :-2, 1:-1]
    kp, km = V[1:-1, 1:-1, 2:], V[1:-1, 1:-1, :-2]
    S = mesh.prices[1:-1][None, None, :]
    hb, ha = mesh.h_beta, mesh.h_alpha
    out = {}
    LB = -(ip - c) / ha + (1.0 + params.theta) * S * (c - jm) / hb
    LC = (c - im) / ha - (1.0 - params.theta) * S * (jp - c) / hb
    pieces = {"LB": LB, "LC": LC}
    if V_next is not None:
        P = mesh.prices
        hp = (P[2:] - P[1:-1])[None, None, :]
        hm = (P[1:-1] - P[:-2])[None, None, :]
        b = mesh.betas[1:-1][None, :, None]
        LA = -((V_next[inner] - c) / mesh.dt
               + params.r * np.maximum(b, 0.0) * (jp - c) / hb
               + params.r * np.minimum(b, 0.0) * (c - jm) / hb
               + params.mu * S * ((kp - c) / hp if params.mu > 0 else (c - km) / hm)
               + 0.5 * params.sigma ** 2 * S * S * 2.0 / (hp + hm) * ((kp - c) / hp - (c - km) / hm))
        pieces["LA"] = LA
    interior = mesh.interior
    for name, arr in pieces.items():
        full = np.full(mesh.shape, np.nan)
        full[inner] = arr
        full[~interior] = np.nan
        out[name] = full
    return out


def penalty_switch(L_value, lam: float):
    """Minimiser of m * L over m in [0, lam]; ties at L = 0 give 0."""
    L_value = np.asarray(L_value, dtype=float)
    res = np.where(L_value < 0, lam, 0.0)
    return float(res) if res.ndim == 0 else res


# -- policy and assembly ---------------------------------------------------

def _neighbour(V: np.ndarray, axis: int, step: int) -> np.ndarray:
    """``out[idx] = V[idx + step]``; zero off the grid."""
    out = np.zeros_like(V)
    src = [slice(None)] * 3
    dst = [slice(None)] * 3
    if step > 0:
        dst[axis], src[axis] = slice(0, -step), slice(step, None)
    else:
        dst[axis], src[axis] = slice(-step, None), slice(0, step)
    out[tuple(dst)] = V[tuple(src)]
    return out


def trade_operators(V: np.ndarray, st: Stencil) -> tuple[np.ndarray, np.ndarray]:
    """Discrete L_B and L_C as seen by the closure (NaN where the trade is disabled)."""
    ip, im = _neighbour(V, 0, 1), _neighbour(V, 0, -1)
    jp, jm = _neighbour(V, 1, 1), _neighbour(V, 1, -1)
    with np.errstate(invalid="ignore"):
        LB = (V - ip) * st.inv_ha + st.cbb * (V - jm)
        LC = (V - im) * st.inv_ha - st.ccb * (jp - V)
    LB = np.where(st.buy_ok == 1, LB, np.nan)
    LC = np.where(st.sell_ok == 1, LC, np.nan)
    return LB, LC


def compute_policy(V: np.ndarray, st: Stencil) -> PenaltyPolicy:
    LB, LC = trade_operators(V, st)
    with np.errstate(invalid="ignore"):
        m = np.where(LB < 0, st.lam_B, 0.0)
        n = np.where(LC < 0, st.lam_C, 0.0)
    return PenaltyPolicy(m_tilde=m, n_tilde=n, lambda_B=st.lam_B, lambda_C=st.lam_C)


def assemble_block(i: int, j: int, st: Stencil, policy: PenaltyPolicy, V_iter: np.ndarray,
                   V_next: np.ndarray, fixed_values: np.ndarray) -> TridiagonalSystem:
    """Tridiagonal system of block ``(i, j)``; fixed nodes get identity rows."""
    na, nb, ns = st.mesh.shape
    unk = st.unknown[i, j] == 1
    if not unk.any():
        raise ContractViolation(f"block ({i}, {j}) has no unknowns")
    dt = st.dt
    zero = np.zeros(ns)
    jp = V_iter[i, j + 1] if j + 1 < nb else zero
    jm = V_iter[i, j - 1] if j > 0 else zero
    ip = V_iter[i + 1, j] if i + 1 < na else zero
    im = V_iter[i - 1, j] if i > 0 else zero
    with np.errstate(invalid="ignore"):
        off = (np.where(st.rup[j] != 0, st.rup[j] * jp, 0.0)
               + np.where(st.rlo[j] != 0, st.rlo[j] * jm, 0.0))
        diag = st.dbase[j].copy()
        m = policy.m_tilde[i, j] * (st.buy_ok[i, j] == 1)
        n = policy.n_tilde[i, j] * (st.sell_ok[i, j] == 1)
        buy = m > 0
        sell = n > 0
        off = np.where(buy, off + dt * m * (ip * st.inv_ha + st.cbb * jm), off)
        diag = np.where(buy, diag + dt * m * (st.inv_ha + st.cbb), diag)
        off = np.where(sell, off + dt * n * (im * st.inv_ha + st.ccb * jp), off)
        diag = np.where(sell, diag + dt * n * (st.inv_ha + st.ccb), diag)
    rhs = np.where(unk, V_next[i, j] + off, fixed_values[i, j])
    diag = np.where(unk, diag, 1.0)
    lower = np.where(unk[1:], -st.sub[1:], 0.0)
    upper = np.where(unk[:-1], -st.sup[:-1], 0.0)
    return TridiagonalSystem(lower=lower, diag=diag, upper=upper, rhs=rhs)
