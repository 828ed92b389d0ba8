"""Mathematical primitives: utility families, liquid wealth, payoffs, the
time-dependent cash shift and the closed-form Black-Scholes value with the
drift used as discount rate.

Everything here is pure and vectorised over numpy arrays; scalars in give
floats out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy.special import erfc

from .errors import ParameterError, UtilityDomainError

__all__ = [
    "Family",
    "PayoffKind",
    "UtilityFunction",
    "ModelParams",
    "wealth",
    "payoff",
    "shift_A",
    "normal_cdf",
    "bs_closed_form",
]


class Family(str, Enum):
    LINEAR = "linear"
    EXPONENTIAL = "exponential"
    POWER = "power"
    LOGARITHMIC = "logarithmic"


class PayoffKind(str, Enum):
    CALL = "call"
    PUT = "put"


def _out(x):
    """Return a Python float for 0-d results, the array otherwise."""
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def _first_bad(x: np.ndarray, ok: np.ndarray) -> float:
    return float(np.asarray(x)[~ok].flat[0])


@dataclass(frozen=True)
class UtilityFunction:
    """One of the four concave utility families.

    Only the parameter belonging to ``family`` is used: ``gamma`` for
    exponential, ``a`` for power, ``b`` for logarithmic.  The linear family
    is the zero risk-aversion member and needs no parameter.
    """

    family: Family = Family.EXPONENTIAL
    gamma: float = 0.1
    a: float = 0.5
    b: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if self.family is Family.EXPONENTIAL and not self.gamma > 0:
            raise ParameterError(f"exponential utility needs gamma > 0, got {self.gamma}")
        if self.family is Family.POWER and not 0 < self.a < 1:
            # a <= 0 makes xi**a non-increasing
            raise ParameterError(f"power utility needs 0 < a < 1, got {self.a}")
        if self.family is Family.LOGARITHMIC and not self.b > 0:
            raise ParameterError(f"logarithmic utility needs b > 0, got {self.b}")

    @classmethod
    def linear(cls) -> "UtilityFunction":
        return cls(Family.LINEAR)

    @classmethod
    def exponential(cls, gamma: float) -> "UtilityFunction":
        return cls(Family.EXPONENTIAL, gamma=gamma)

    @classmethod
    def power(cls, a: float) -> "UtilityFunction":
        return cls(Family.POWER, a=a)

    @classmethod
    def logarithmic(cls, b: float) -> "UtilityFunction":
        return cls(Family.LOGARITHMIC, b=b)

    # -- domains -----------------------------------------------------------

    def in_domain(self, xi) -> np.ndarray:
        """Boolean mask of arguments at which U is defined."""
        xi = np.asarray(xi, dtype=float)
        if self.family is Family.POWER:
            return xi > 0
        if self.family is Family.LOGARITHMIC:
            return self.b * xi + 1 > 0
        return np.isfinite(xi)

    def in_range(self, y) -> np.ndarray:
        """Boolean mask of values at which the inverse is defined."""
        y = np.asarray(y, dtype=float)
        if self.family is Family.EXPONENTIAL:
            return y < 1
        if self.family is Family.POWER:
            return y > 0
        return np.isfinite(y)

    def _check_domain(self, xi):
        ok = self.in_domain(xi)
        if not np.all(ok):
            bad = _first_bad(xi, ok)
            raise UtilityDomainError(
                f"{self.family.value} utility evaluated at {bad!r}, outside its domain", value=bad)

    def _check_range(self, y):
        ok = self.in_range(y)
        if not np.all(ok):
            bad = _first_bad(y, ok)
            raise UtilityDomainError(
                f"{self.family.value} inverse utility evaluated at {bad!r}, outside the range of U",
                value=bad)

    # -- evaluation --------------------------------------------------------

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        self._check_domain(xi)
        if self.family is Family.LINEAR:
            return _out(xi.copy())
        if self.family is Family.EXPONENTIAL:
            return _out(-np.expm1(-self.gamma * xi))
        if self.family is Family.POWER:
            return _out(xi ** self.a)
        return _out(np.log1p(self.b * xi))

    value = __call__

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        self._check_range(y)
        if self.family is Family.LINEAR:
            return _out(y.copy())
        if self.family is Family.EXPONENTIAL:
            return _out(-np.log1p(-y) / self.gamma)
        if self.family is Family.POWER:
            return _out(y ** (1.0 / self.a))
        return _out(np.expm1(y) / self.b)

    def risk_aversion(self, xi):
        """Arrow-Pratt coefficient -U''/U'."""
        xi = np.asarray(xi, dtype=float)
        self._check_domain(xi)
        if self.family is Family.LINEAR:
            return _out(np.zeros_like(xi))
        if self.family is Family.EXPONENTIAL:
            return _out(np.full_like(xi, self.gamma))
        if self.family is Family.POWER:
            return _out((1.0 - self.a) / xi)
        return _out(self.b / (self.b * xi + 1.0))


@dataclass(frozen=True)
class ModelParams:
    """Market constants and the option position.

    ``delta`` is -1 for the short buyer position, +1 for the long seller
    position and 0 for the portfolio without option.
    """

    mu: float = 0.1
    sigma: float = 0.3
    r: float = 0.05
    theta: float = 0.01
    K: float = 50.0
    T: float = 1.0
    delta: int = -1
    payoff_kind: PayoffKind = PayoffKind.CALL

    def __post_init__(self):
        object.__setattr__(self, "payoff_kind", PayoffKind(self.payoff_kind))
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")
        if not self.K > 0:
            raise ParameterError(f"strike K must be positive, got {self.K}")
        if not self.T > 0:
            raise ParameterError(f"maturity T must be positive, got {self.T}")
        if not 0 <= self.theta < 1:
            raise ParameterError(f"theta must lie in [0, 1), got {self.theta}")
        if self.delta not in (-1, 0, 1):
            raise ParameterError(f"delta must be one of -1, 0, +1, got {self.delta}")
        if self.mu == 0:
            raise ParameterError("mu = 0 is not supported: the cash shift divides by mu")

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)


def wealth(alpha, beta, s, theta):
    """Liquid wealth after closing the stock position at bid/ask."""
    alpha = np.asarray(alpha, dtype=float)
    return _out(beta + s * (alpha - theta * np.abs(alpha)))


def payoff(s, params: ModelParams):
    s = np.asarray(s, dtype=float)
    if params.payoff_kind is PayoffKind.CALL:
        return _out(np.maximum(s - params.K, 0.0))
    return _out(np.maximum(params.K - s, 0.0))


def shift_A(beta, t, params: ModelParams):
    """Cash shift (beta/mu)(r - mu)(1 - exp(-mu (T - t))); vanishes at t = T."""
    if params.mu == 0:
        raise ParameterError("shift function is singular for mu = 0")
    tau = params.T - np.asarray(t, dtype=float)
    beta = np.asarray(beta, dtype=float)
    return _out(beta / params.mu * (params.r - params.mu) * -np.expm1(-params.mu * tau))


_SQRT1_2 = math.sqrt(0.5)


def normal_cdf(d):
    """Standard normal distribution function via erfc (no cancellation in the left tail)."""
    d = np.asarray(d, dtype=float)
    return _out(0.5 * erfc(-d * _SQRT1_2))


def bs_closed_form(s, t, params: ModelParams):
    """Black-Scholes value of ``delta`` options with the drift ``mu`` as rate.

    Returns ``delta * payoff`` at ``t >= T``.
    """
    s = np.asarray(s, dtype=float)
    delta = params.delta
    tau = params.T - t
    if delta == 0:
        return _out(np.zeros_like(s))
    if tau <= 0:
        return _out(delta * np.asarray(payoff(s, params)))
    K, mu, sig = params.K, params.mu, params.sigma
    disc = math.exp(-mu * tau)
    vol = sig * math.sqrt(tau)
    pos = s > 0
    safe = np.where(pos, s, K)
    d1 = (np.log(safe / K) + (mu + 0.5 * sig * sig) * tau) / vol
    d2 = d1 - vol
    if params.payoff_kind is PayoffKind.CALL:
        v = safe * normal_cdf(d1) - K * disc * normal_cdf(d2)
        v = np.where(pos, v, 0.0)
    else:
        v = K * disc * normal_cdf(-d2) - safe * normal_cdf(-d1)
        v = np.where(pos, v, K * disc)
    return _out(delta * v)
