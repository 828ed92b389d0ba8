"""Monte Carlo value of the buy-and-hold (no-trade) strategy.

Any fixed strategy is admissible, so its expected terminal utility bounds
the optimal value from below.  Paths are drawn in fixed batches, each with
its own Philox stream spawned from the seed, so results depend only on
``(paths, seed, batch_size, antithetic)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, UtilityDomainError
from .model import ModelParams, UtilityFunction

__all__ = ["McConfig", "McResult", "buy_and_hold_utility"]


@dataclass(frozen=True)
class McConfig:
    paths: int = 100_000
    seed: int = 20240601
    antithetic: bool = False
    batch_size: int = 16_384

    def __post_init__(self):
        if int(self.paths) != self.paths or self.paths < 1:
            raise ConfigError(f"mc_paths must be a positive integer, got {self.paths}")
        if self.antithetic and self.paths % 2:
            raise ConfigError("antithetic sampling needs an even number of paths")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError(f"mc_seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.batch_size < 2 or self.batch_size % 2:
            raise ConfigError("batch_size must be an even integer >= 2")


@dataclass(frozen=True)
class McResult:
    mean: float
    se: float
    samples: int  # independent samples behind ``se`` (pairs when antithetic)


def _normals(mc: McConfig):
    """Yield standard normal batches in a fixed order."""
    n_batches = -(-mc.paths // mc.batch_size)
    streams = np.random.SeedSequence(int(mc.seed)).spawn(n_batches)
    left = mc.paths
    for ss in streams:
        size = min(mc.batch_size, left)
        left -= size
        gen = np.random.Generator(np.random.Philox(ss))
        if mc.antithetic:
            z = gen.standard_normal(size // 2)
            yield np.concatenate([z, -z]), size // 2
        else:
            yield gen.standard_normal(size), 0


def buy_and_hold_utility(alpha: float, beta: float, s: float, params: ModelParams,
                         u: UtilityFunction, mc: McConfig) -> McResult:
    """Sample mean and standard error of U(beta e^{rT} + S_T (alpha - theta |alpha|))."""
    T = params.T
    drift = (params.mu - 0.5 * params.sigma ** 2) * T
    vol = params.sigma * math.sqrt(T)
    cash = beta * math.exp(params.r * T)
    units = alpha - params.theta * abs(alpha)
    samples = []
    for z, half in _normals(mc):
        w = cash + s * np.exp(drift + vol * z) * units
        ok = u.in_domain(w)
        if not ok.all():
            bad = float(w[~ok][0])
            raise UtilityDomainError(f"terminal wealth {bad!r} outside the utility's domain",
                                     value=bad)
        y = np.asarray(u(w), dtype=float)
        samples.append(0.5 * (y[:half] + y[half:]) if half else y)
    x = np.concatenate(samples)
    n = x.size
    d = x - x[0]  # shifted data: exact zero spread for identical samples
    mean = float(x[0] + np.mean(d))
    se = float(np.std(d, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return McResult(mean=mean, se=se, samples=n)
