"""Pure-numpy policy-iteration sweep (fallback backend).

Vectorised over all ``(i, j)`` blocks; the arithmetic per node follows the
compiled kernel exactly so both backends agree bit for bit.
"""

from __future__ import annotations

import numpy as np


def _shift(V: np.ndarray, axis: int, step: int) -> np.ndarray:
    out = np.zeros_like(V)
    src = [slice(None)] * 3
    dst = [slice(None)] * 3
    if step > 0:
        dst[axis], src[axis] = slice(0, -step), slice(step, None)
    else:
        dst[axis], src[axis] = slice(-step, None), slice(0, step)
    out[tuple(dst)] = V[tuple(src)]
    return out


def policy_sweep(V, Vn1, G, unknown, buy_ok, sell_ok, sub, sup, cbb, ccb, rup, rlo, dbase,
                 inv_ha, dt_lam_B, dt_lam_C, out):
    """Same contract as the compiled ``policy_sweep``."""
    ns = V.shape[2]
    vip, vim = _shift(V, 0, 1), _shift(V, 0, -1)
    vjp, vjm = _shift(V, 1, 1), _shift(V, 1, -1)
    ru = rup[None, :, None]
    rl = rlo[None, :, None]
    unk = unknown == 1
    with np.errstate(all="ignore"):
        off = np.where(ru != 0.0, ru * vjp, 0.0) + np.where(rl != 0.0, rl * vjm, 0.0)
        diag = np.broadcast_to(dbase[None, :, :], V.shape)
        lb = (V - vip) * inv_ha + cbb * (V - vjm)
        buy = (buy_ok == 1) & (lb < 0.0)
        off = np.where(buy, off + dt_lam_B * (vip * inv_ha + cbb * vjm), off)
        diag = np.where(buy, diag + dt_lam_B * (inv_ha + cbb), diag)
        lc = (V - vim) * inv_ha - ccb * (vjp - V)
        sell = (sell_ok == 1) & (lc < 0.0)
        off = np.where(sell, off + dt_lam_C * (vim * inv_ha + ccb * vjp), off)
        diag = np.where(sell, diag + dt_lam_C * (inv_ha + ccb), diag)
        rhs = Vn1 + off

        cp = np.empty(V.shape)
        dp = np.empty(V.shape)
        cp_prev = np.zeros(V.shape[:2])
        dp_prev = np.zeros(V.shape[:2])
        for k in range(ns):
            u = unk[:, :, k]
            a = -sub[k]
            m = diag[:, :, k] - a * cp_prev
            if np.any(u & (m == 0.0)):
                return -1.0
            cp_prev = np.where(u, -sup[k] / m, 0.0)
            dp_prev = np.where(u, (rhs[:, :, k] - a * dp_prev) / m, G[:, :, k])
            cp[:, :, k] = cp_prev
            dp[:, :, k] = dp_prev
        x = dp[:, :, ns - 1]
        out[:, :, ns - 1] = x
        for k in range(ns - 2, -1, -1):
            x = np.where(unk[:, :, k], dp[:, :, k] - cp[:, :, k] * x, dp[:, :, k])
            out[:, :, k] = x
    if not unk.any():
        return 0.0
    return float(np.max(np.abs(out[unk] - V[unk])))
