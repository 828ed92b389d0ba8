"""Thomas algorithm for a single tridiagonal system."""

from __future__ import annotations

import numpy as np

from .discretization import TridiagonalSystem
from .errors import NumericalError

__all__ = ["thomas_solve"]


def thomas_solve(system: TridiagonalSystem) -> np.ndarray:
    """Solve ``system`` by forward elimination and back substitution.

    No pivoting: intended for diagonally dominant (M-matrix) systems.
    Raises NumericalError on a zero or non-finite pivot.
    """
    a = np.asarray(system.lower, dtype=float)
    b = np.asarray(system.diag, dtype=float)
    c = np.asarray(system.upper, dtype=float)
    d = np.asarray(system.rhs, dtype=float)
    n = b.size
    cp = np.empty(max(n - 1, 0))
    dp = np.empty(n)
    m = b[0]
    if m == 0 or not np.isfinite(m):
        raise NumericalError("zero pivot in row 0")
    if n > 1:
        cp[0] = c[0] / m
    dp[0] = d[0] / m
    for k in range(1, n):
        m = b[k] - a[k - 1] * cp[k - 1]
        if m == 0 or not np.isfinite(m):
            raise NumericalError(f"zero pivot in row {k}")
        if k < n - 1:
            cp[k] = c[k] / m
        dp[k] = (d[k] - a[k - 1] * dp[k - 1]) / m
    x = np.empty(n)
    x[-1] = dp[-1]
    for k in range(n - 2, -1, -1):
        x[k] = dp[k] - cp[k] * x[k + 1]
    return x
