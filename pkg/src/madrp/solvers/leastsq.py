"""Least-squares risk parity formulations.

``ls_rel`` minimizes ``sum_i (RC_i / MAD - 1/n)^2`` and ``ls_abs`` minimizes
``sum_i sum_j (RC_i - RC_j)^2`` over the simplex. Both objectives are
nonconvex and, through the MAD subgradient, nonsmooth. They are attacked by
smoothing continuation: ``|d|`` is replaced by ``sqrt(d^2 + eps^2)``, the
smoothed least-squares problem is solved by Levenberg-Marquardt in softmax
coordinates, and ``eps`` is driven towards zero. The final iterate is handed to
the active-set refinement, and the exact (nonsmooth) objective decides which
point is returned.
"""
from __future__ import annotations

import time

import numpy as np

from .. import risk
from ..optim import SolveStatus
from ..optim.lp import ITERATION_LIMIT, OPTIMAL
from .baselines import solve_vol_rp
from .refine import refine_rp
from .report import diagnostics, make_report

EPS_LEVELS = tuple(10.0 ** -k for k in range(1, 11))
MAX_STEP = 0.5


def _smooth_rc(D, x, eps):
    """Smoothed contributions ``x_i g_i`` and their Jacobian in ``x``."""
    T = D.shape[0]
    d = D @ x
    root = np.sqrt(d * d + eps * eps)
    g = D.T @ (d / root) / T
    curv = eps * eps / root ** 3
    H = (D.T * curv) @ D / T
    rc = x * g
    J = np.diag(g) + x[:, None] * H
    return rc, J


def _residual(rc, J, kind):
    n = rc.size
    if kind == "rel":
        total = rc.sum()
        rel = rc / total
        r = rel - 1.0 / n
        Jr = (J - np.outer(rel, J.sum(axis=0))) / total
        return r, Jr
    c = np.sqrt(2.0 * n)
    r = c * (rc - rc.mean())
    Jr = c * (J - J.mean(axis=0))
    return r, Jr


def _softmax(z):
    e = np.exp(z - z.max())
    return e / e.sum()


def exact_objective(scn, x, kind):
    """The nonsmooth objective at ``x`` with the most balanced subgradient."""
    n = scn.n
    m = risk.mad(scn, x)
    if not m > 0:
        return np.inf
    rc = risk.risk_contributions(scn, x, tie_rule="balanced").rc
    if kind == "rel":
        return float(np.sum((rc / m - 1.0 / n) ** 2))
    return float(2.0 * n * np.sum((rc - rc.mean()) ** 2))


def _lm(D, x0, eps, kind, max_iter, tol):
    """Levenberg-Marquardt on the smoothed residual; ``z[0]`` stays fixed."""
    z = np.log(np.maximum(x0, 1e-300))
    z -= z[0]
    x = _softmax(z)
    rc, J = _smooth_rc(D, x, eps)
    r, Jr = _residual(rc, J, kind)
    cost = r @ r
    damp = 1e-3
    it = 0
    for it in range(1, max_iter + 1):
        if cost <= tol:
            break
        Jz = (Jr @ (np.diag(x) - np.outer(x, x)))[:, 1:]
        A = Jz.T @ Jz
        gz = Jz.T @ r
        accepted = False
        while damp < 1e12:
            M = A + damp * (np.diag(np.diag(A)) + 1e-12 * np.trace(A) * np.eye(A.shape[0]))
            step = np.linalg.lstsq(M, -gz, rcond=None)[0]
            big = np.max(np.abs(step))
            if big > MAX_STEP:  # trust region in log-weight space
                step *= MAX_STEP / big
            zn = z.copy()
            zn[1:] += step
            xn = _softmax(zn)
            rcn, Jn = _smooth_rc(D, xn, eps)
            rn, Jrn = _residual(rcn, Jn, kind)
            cn = rn @ rn
            if cn < cost:
                z, x, r, Jr, cost = zn, xn, rn, Jrn, cn
                damp = max(damp / 3.0, 1e-12)
                accepted = True
                break
            damp *= 4.0
        if not accepted or np.max(np.abs(step)) < 1e-15:
            break
    return x, it


def _starts(scn, restarts, seed):
    """Closed form (additive markets), the volatility parity point, EW, then Dirichlet draws.

    A start where some asset has a negative contribution (a hedge) tends to
    slide into a boundary local minimum with that weight at zero; the
    volatility parity point has positive contributions on typical data.
    """
    n = scn.n
    count = 0
    if risk.is_additive(scn, 1e-12) and np.all(scn.asset_mads > 0):
        count += 1
        yield "closed_form", risk.closed_form_rp(scn).x
    if count < restarts and np.all(np.diag(scn.covariance) > 0):
        count += 1
        yield "vol_rp", solve_vol_rp(scn).x
    if count < restarts:
        count += 1
        yield "ew", np.full(n, 1.0 / n)
    rng = np.random.default_rng(seed)
    for k in range(max(0, restarts - count)):
        yield f"dirichlet_{k}", rng.dirichlet(np.ones(n))


def _solve_ls(scn, kind, method, tol, max_iter, restarts, seed, x0):
    t0 = time.perf_counter()
    n = scn.n
    if n < 2:
        raise ValueError(f"{method} needs at least two assets")
    D = scn.deviations
    target = tol * tol
    starts = [("given", np.asarray(x0, float) / np.sum(x0))] if x0 is not None else []
    starts += list(_starts(scn, restarts, seed))
    best = None
    tried = []
    for label, xs in starts:
        f0 = exact_objective(scn, xs, kind)
        if f0 <= target:
            best = (f0, xs, label, 0)
            tried.append(label)
            break
        scale = float(np.mean(np.abs(D @ xs))) or 1.0
        x, used = xs, 0
        for eps in EPS_LEVELS:
            x, k = _lm(D, x, eps * scale, kind, max_iter, target * 1e-4)
            used += k
        cand = [x]
        out = refine_rp(scn, x)
        if out is not None:
            cand.append(out[0])
        for c in cand:
            f = exact_objective(scn, c, kind)
            if best is None or f < best[0]:
                best = (f, c, label, used)
        tried.append(label)
        if best[0] <= target:
            break
    f, x, label, used = best
    state = OPTIMAL if f <= target else ITERATION_LIMIT
    status = SolveStatus(state, used, float(np.sqrt(f)), f)
    return make_report(scn, x, method, status, time.perf_counter() - t0,
                       objective=f, start=label, starts_tried=tried, certified=f <= target)


def solve_ls_rel(scn, tol=1e-8, max_iter=500, restarts=5, seed=0, x0=None):
    """Risk parity via ``min sum_i (RC_i(x)/MAD(x) - 1/n)^2`` over the simplex.

    Parameters
    ----------
    tol : float
        A point is certified risk parity when the objective is at most ``tol**2``.
    max_iter : int
        Levenberg-Marquardt iterations per start and smoothing level.
    restarts : int
        Number of starting points: the closed form when MAD is additive, the
        volatility risk parity portfolio, EW, then seeded Dirichlet draws. The
        search stops at the first certified point.
    x0 : array_like, optional
        Extra starting point tried first.
    """
    return _solve_ls(scn, "rel", "ls_rel", tol, max_iter, restarts, seed, x0)


def solve_ls_abs(scn, tol=1e-8, max_iter=500, restarts=5, seed=0, x0=None):
    """Risk parity via ``min sum_i sum_j (RC_i(x) - RC_j(x))^2`` over the simplex.

    ``tol`` is relative: certification requires the objective to be at most
    ``(tol * MAD)^2`` at the returned point. Other parameters as in
    :func:`solve_ls_rel`.
    """
    rep = _solve_ls(scn, "abs", "ls_abs", tol * max(float(np.mean(scn.asset_mads)), 1e-300),
                    max_iter, restarts, seed, x0)
    return rep
