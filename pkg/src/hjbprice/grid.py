"""Tensor-product mesh over the truncated (alpha, beta, S) box.

Nodes are classified as insolvent (liquid wealth <= 0), boundary (on a box
face or next to an insolvent node) or interior.  Values are stored in
C order with shape ``(N_alpha+1, N_beta+1, N_S+1)``, so ``k`` is the fastest
index and each ``(i, j)`` block is a contiguous run of ``N_S+1`` entries.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import ConfigError
from .model import ModelParams

__all__ = ["SMesh", "GridSpec", "Mesh3D", "build_mesh"]


class SMesh(str, Enum):
    UNIFORM = "uniform"
    LOG_UNIFORM = "log_uniform"


@dataclass(frozen=True)
class GridSpec:
    N_alpha: int = 6
    N_beta: int = 6
    N_S: int = 100
    N: int = 10
    L_alpha_minus: float = 0.2
    L_alpha_plus: float = 0.6
    L_beta_minus: float = -100.0
    L_beta_plus: float = 100.0
    S_plus: float = 100.0
    s_mesh_kind: SMesh = SMesh.UNIFORM

    def __post_init__(self):
        object.__setattr__(self, "s_mesh_kind", SMesh(self.s_mesh_kind))
        for name in ("N_alpha", "N_beta", "N_S"):
            n = getattr(self, name)
            if int(n) != n or n < 2:
                raise ConfigError(f"{name} must be an integer >= 2, got {n}")
        if int(self.N) != self.N or self.N < 1:
            raise ConfigError(f"N must be a positive integer, got {self.N}")
        if not self.L_alpha_minus < self.L_alpha_plus:
            raise ConfigError("degenerate alpha span: need L_alpha_min < L_alpha_max")
        if not self.L_beta_minus < self.L_beta_plus:
            raise ConfigError("degenerate beta span: need L_beta_min < L_beta_max")
        if not self.S_plus > 0:
            raise ConfigError(f"S_max must be positive, got {self.S_plus}")

    @property
    def h_alpha(self) -> float:
        return (self.L_alpha_plus - self.L_alpha_minus) / self.N_alpha

    @property
    def h_beta(self) -> float:
        return (self.L_beta_plus - self.L_beta_minus) / self.N_beta

    @property
    def h_S(self) -> float:
        """Uniform S step; for log-uniform meshes see ``Mesh3D.prices``."""
        return self.S_plus / self.N_S

    def dt(self, T: float) -> float:
        return T / self.N

    def scaled(self, **factors: int) -> "GridSpec":
        """Copy with counts multiplied, e.g. ``scaled(N_S=2)``."""
        kw = {name: getattr(self, name) * f for name, f in factors.items()}
        return replace(self, **kw)


@dataclass(frozen=True, eq=False)
class Mesh3D:
    spec: GridSpec
    alphas: np.ndarray
    betas: np.ndarray
    prices: np.ndarray
    theta: float
    T: float
    solvent: np.ndarray = field(repr=False)
    boundary: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.alphas.size, self.betas.size, self.prices.size)

    @property
    def size(self) -> int:
        a, b, s = self.shape
        return a * b * s

    @property
    def interior(self) -> np.ndarray:
        return self.solvent & ~self.boundary

    @property
    def insolvent(self) -> np.ndarray:
        return ~self.solvent

    @property
    def dt(self) -> float:
        return self.T / self.spec.N

    @property
    def h_alpha(self) -> float:
        return self.spec.h_alpha

    @property
    def h_beta(self) -> float:
        return self.spec.h_beta

    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcast (alpha, beta, S) coordinate arrays of full mesh shape."""
        return np.meshgrid(self.alphas, self.betas, self.prices, indexing="ij")

    def wealth(self) -> np.ndarray:
        a = self.alphas[:, None, None]
        return self.betas[None, :, None] + self.prices[None, None, :] * (a - self.theta * np.abs(a))

    def stack_index(self, i: int, j: int, k: int) -> int:
        na, nb, ns = self.shape
        if not (0 <= i < na and 0 <= j < nb and 0 <= k < ns):
            raise IndexError(f"node ({i}, {j}, {k}) outside mesh of shape {self.shape}")
        return (i * nb + j) * ns + k

    def unstack(self, flat: int) -> tuple[int, int, int]:
        na, nb, ns = self.shape
        if not 0 <= flat < na * nb * ns:
            raise IndexError(f"flat index {flat} outside mesh of size {self.size}")
        ij, k = divmod(flat, ns)
        i, j = divmod(ij, nb)
        return i, j, k

    def nearest(self, alpha: float, beta: float, s: float | None = None):
        """Indices of the node closest to the given coordinates."""
        i = int(np.argmin(np.abs(self.alphas - alpha)))
        j = int(np.argmin(np.abs(self.betas - beta)))
        if s is None:
            return i, j
        return i, j, int(np.argmin(np.abs(self.prices - s)))


def _price_nodes(spec: GridSpec, K: float) -> np.ndarray:
    n = spec.N_S
    if spec.s_mesh_kind is SMesh.UNIFORM:
        return np.arange(n + 1) * spec.h_S
    s_min = 0.5 * K
    if not s_min < spec.S_plus:
        raise ConfigError(f"log-uniform S mesh needs K/2 < S_max (K/2 = {s_min}, S_max = {spec.S_plus})")
    s = np.empty(n + 1)
    s[0] = 0.0
    s[1:] = s_min * (spec.S_plus / s_min) ** (np.arange(n) / (n - 1))
    s[-1] = spec.S_plus
    return s


def build_mesh(spec: GridSpec, params: ModelParams) -> Mesh3D:
    alphas = spec.L_alpha_minus + np.arange(spec.N_alpha + 1) * spec.h_alpha
    betas = spec.L_beta_minus + np.arange(spec.N_beta + 1) * spec.h_beta
    prices = _price_nodes(spec, params.K)
    for name, c in (("alpha", alphas), ("beta", betas), ("S", prices)):
        if not np.all(np.diff(c) > 0):
            raise ConfigError(f"{name} coordinates are not strictly increasing")

    a = alphas[:, None, None]
    w = betas[None, :, None] + prices[None, None, :] * (a - params.theta * np.abs(a))
    solvent = w > 0

    face = np.zeros(solvent.shape, dtype=bool)
    face[0] = face[-1] = True
    face[:, 0] = face[:, -1] = True
    face[:, :, 0] = face[:, :, -1] = True
    near_insolvent = np.zeros_like(solvent)
    bad = ~solvent
    near_insolvent[:-1] |= bad[1:]
    near_insolvent[1:] |= bad[:-1]
    near_insolvent[:, :-1] |= bad[:, 1:]
    near_insolvent[:, 1:] |= bad[:, :-1]
    near_insolvent[:, :, :-1] |= bad[:, :, 1:]
    near_insolvent[:, :, 1:] |= bad[:, :, :-1]
    boundary = solvent & (face | near_insolvent)

    for arr in (alphas, betas, prices, solvent, boundary):
        arr.setflags(write=False)
    return Mesh3D(spec=spec, alphas=alphas, betas=betas, prices=prices, theta=params.theta,
                  T=params.T, solvent=solvent, boundary=boundary)
