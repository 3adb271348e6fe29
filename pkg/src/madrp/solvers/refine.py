"""Active-set refinement of an approximate MAD risk parity portfolio.

Near the solution the scenarios split into ones with a clear sign and a small
"tie" set ``K`` whose portfolio deviation vanishes. With signs ``sigma`` fixed
off ``K``, risk parity means ``x ∝ 1/g(s)`` with

    g(s) = (1/T) * (sum_{t not in K} sigma_t D_t + sum_{t in K} s_t D_t),

and ``s_K`` in [-1, 1] maximizing ``sum_i ln g_i(s)``: the stationarity
condition of that concave problem is exactly ``D_K x = 0``. Solving it by
projected Newton gives ties exact to rounding and identical contributions.
"""
from __future__ import annotations

import warnings

import numpy as np
from scipy.optimize import lsq_linear

from .. import kernels
from ..risk import TIE_TOL

DELTAS = (1e-10, 1e-8, 1e-6, 1e-4, 1e-3)


def _newton_box(B, g0, s, max_iter=100):
    """Maximize ``sum ln(g0 + B.T @ s)`` over the box ``[-1, 1]``."""
    k = s.size

    def phi(sv):
        g = g0 + B.T @ sv
        return (np.log(g).sum() if np.all(g > 0) else -np.inf), g

    val, g = phi(s)
    if not np.isfinite(val):
        return None
    for _ in range(max_iter):
        inv = 1.0 / g
        grad = B @ inv
        free = ~(((s >= 1.0) & (grad > 0)) | ((s <= -1.0) & (grad < 0)))
        # stationarity: portfolio deviations on K are T*grad/sum(1/g)
        if np.all(np.abs(grad[free]) <= 1e-15 * np.abs(B).max(initial=0.0) * inv.sum()):
            break
        Bf = B[free]
        H = (Bf * inv ** 2) @ Bf.T
        H[np.diag_indices_from(H)] += 1e-14 * max(np.trace(H), 1e-300)
        step = np.zeros(k)
        try:
            step[free] = np.linalg.solve(H, grad[free])
        except np.linalg.LinAlgError:
            step[free] = np.linalg.lstsq(H, grad[free], rcond=None)[0]
        gnorm = float(np.max(np.abs(grad[free])))
        t = 1.0
        improved = False
        while t > 1e-12:
            cand = np.clip(s + t * step, -1.0, 1.0)
            cv, cg = phi(cand)
            if np.isfinite(cv):
                # the objective stops resolving progress near the optimum, so
                # a step that shrinks the projected gradient also counts
                ok = cv >= val + 1e-4 * t * (grad @ (cand - s))
                if not ok:
                    cgrad = B @ (1.0 / cg)
                    cfree = ~(((cand >= 1.0) & (cgrad > 0)) | ((cand <= -1.0) & (cgrad < 0)))
                    ok = np.max(np.abs(cgrad[cfree]), initial=0.0) < 0.5 * gnorm
                if ok:
                    improved = not np.array_equal(cand, s)
                    s, val, g = cand, cv, cg
                    break
            t *= 0.5
        if not improved:
            break
    return s, g


def refine_rp(scn, x, max_shift=1e-2, deltas=DELTAS):
    """Return ``(x_refined, info)`` or ``None`` when no candidate tie set is consistent."""
    D = scn.deviations
    T = scn.T
    x = np.asarray(x, dtype=np.float64)
    d = kernels.deviations(D, x)
    scale = float(np.max(np.abs(d)))
    if scale <= 0.0:
        return None
    lam = float(np.abs(d).sum()) / T / x.size
    tried = set()
    for delta in deltas:
        K = np.flatnonzero(np.abs(d) <= delta * scale)
        key = tuple(K)
        if key in tried:
            continue
        tried.add(key)
        sigma = np.where(d > 0, 1.0, -1.0)
        sigma[K] = 0.0
        g0 = kernels.signed_colmean(D, sigma)
        B = D[K] / T
        if K.size:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                s0 = lsq_linear(B.T, lam / x - g0, bounds=(-1.0, 1.0), method="bvls").x
            if not np.all(g0 + B.T @ s0 > 0):
                s0 = np.zeros(K.size)
            out = _newton_box(B, g0, s0)
            if out is None:
                continue
            sK, g = out
        else:
            sK, g = np.zeros(0), g0
        if not np.all(g > 0):
            continue
        xr = (1.0 / g) / np.sum(1.0 / g)
        if np.max(np.abs(xr - x)) > max_shift:
            continue
        s = sigma.copy()
        s[K] = sK
        dr = kernels.deviations(D, xr)
        tie_abs = TIE_TOL * float(np.max(np.abs(dr)))
        interior = np.abs(s) < 1.0
        if np.any(np.abs(dr[interior]) > tie_abs):
            continue
        if np.any(s[~interior] * dr[~interior] < -tie_abs):
            continue
        return xr, {"tie_set": [int(t) for t in K[np.abs(sK) < 1.0]], "delta": delta}
    return None
