# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled policy-iteration sweep.

Mirrors ``_sweep_py.policy_sweep`` operation for operation so both backends
return bitwise identical fields (compile without FMA contraction).
"""

from libc.math cimport fabs
from libc.stdlib cimport malloc, free


def policy_sweep(const double[:, :, ::1] V, const double[:, :, ::1] Vn1,
                 const double[:, :, ::1] G,
                 const unsigned char[:, :, ::1] unknown,
                 const unsigned char[:, :, ::1] buy_ok,
                 const unsigned char[:, :, ::1] sell_ok,
                 const double[::1] sub, const double[::1] sup,
                 const double[::1] cbb, const double[::1] ccb,
                 const double[::1] rup, const double[::1] rlo,
                 const double[:, ::1] dbase,
                 double inv_ha, double dt_lam_B, double dt_lam_C,
                 double[:, :, ::1] out):
    """One sweep: policy from ``V``, block solves, result in ``out``.

    Returns max |out - V| over unknown nodes, or -1.0 on a zero pivot.
    """
    cdef Py_ssize_t na = V.shape[0], nb = V.shape[1], ns = V.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double v, off, diag, rhs, a, m, lb, lc, x, d, tol = 0.0
    cdef double vip, vim, vjp, vjm, cp_prev, dp_prev
    cdef double *cp = <double *> malloc(ns * sizeof(double))
    cdef double *dp = <double *> malloc(ns * sizeof(double))
    if cp == NULL or dp == NULL:
        free(cp)
        free(dp)
        raise MemoryError()
    try:
        for i in range(na):
            for j in range(nb):
                cp_prev = 0.0
                dp_prev = 0.0
                for k in range(ns):
                    if unknown[i, j, k]:
                        v = V[i, j, k]
                        off = ((rup[j] * V[i, j + 1, k] if rup[j] != 0.0 else 0.0)
                               + (rlo[j] * V[i, j - 1, k] if rlo[j] != 0.0 else 0.0))
                        diag = dbase[j, k]
                        if buy_ok[i, j, k]:
                            vip = V[i + 1, j, k]
                            vjm = V[i, j - 1, k]
                            lb = (v - vip) * inv_ha + cbb[k] * (v - vjm)
                            if lb < 0.0:
                                off = off + dt_lam_B * (vip * inv_ha + cbb[k] * vjm)
                                diag = diag + dt_lam_B * (inv_ha + cbb[k])
                        if sell_ok[i, j, k]:
                            vim = V[i - 1, j, k]
                            vjp = V[i, j + 1, k]
                            lc = (v - vim) * inv_ha - ccb[k] * (vjp - v)
                            if lc < 0.0:
                                off = off + dt_lam_C * (vim * inv_ha + ccb[k] * vjp)
                                diag = diag + dt_lam_C * (inv_ha + ccb[k])
                        rhs = Vn1[i, j, k] + off
                        a = -sub[k]
                        m = diag - a * cp_prev
                        if m == 0.0:
                            return -1.0
                        cp_prev = -sup[k] / m
                        dp_prev = (rhs - a * dp_prev) / m
                    else:
                        cp_prev = 0.0
                        dp_prev = G[i, j, k]
                    cp[k] = cp_prev
                    dp[k] = dp_prev
                x = dp[ns - 1]
                out[i, j, ns - 1] = x
                if unknown[i, j, ns - 1]:
                    d = fabs(x - V[i, j, ns - 1])
                    if d > tol:
                        tol = d
                for k in range(ns - 2, -1, -1):
                    if unknown[i, j, k]:
                        x = dp[k] - cp[k] * x
                        d = fabs(x - V[i, j, k])
                        if d > tol:
                            tol = d
                    else:
                        x = dp[k]
                    out[i, j, k] = x
    finally:
        free(cp)
        free(dp)
    return tol
