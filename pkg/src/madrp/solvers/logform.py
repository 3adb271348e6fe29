"""MAD risk parity through its two logarithmic convex formulations.

``log_obj`` minimizes ``MAD(x) - lam * sum ln x`` over ``x > 0``; ``log_constr``
minimizes ``MAD(x)`` subject to ``sum ln x >= c``. Both have a unique minimizer
whose normalization is the risk parity portfolio, whatever ``lam > 0`` or ``c``.
"""
from __future__ import annotations

import math
import time

import numpy as np

from .. import risk
from ..optim import BarrierProblem, BarrierSchedule, SolveStatus, solve_barrier
from ..optim.lp import INFEASIBLE, OPTIMAL
from ..errors import SolverError
from .baselines import check_nondegenerate
from .refine import refine_rp
from .report import diagnostics, make_report


def _polish(scn, x, info):
    """Replace ``x`` by its active-set refinement when that is more accurate."""
    out = refine_rp(scn, x)
    if out is None:
        info["polished"] = False
        return x
    xr, meta = out
    if diagnostics(scn, xr)[3] <= diagnostics(scn, x)[3]:
        info["polished"] = True
        info["tie_set"] = meta["tie_set"]
        return xr
    info["polished"] = False
    return x


def solve_log_obj(scn, lam=None, tol=1e-10, max_iter=400, polish=True, check=True):
    """Risk parity via ``min MAD(x) - lam * sum_i ln x_i``.

    Parameters
    ----------
    scn : ScenarioMatrix
    lam : float, optional
        Barrier weight; defaults to ``mad(EW) / n``. Only the scale of the
        unnormalized minimizer depends on it.
    tol : float
        Duality-gap target of the barrier method.
    max_iter : int
        Newton step budget.
    polish : bool
        Run the active-set refinement on the normalized solution.
    check : bool
        Verify first that the market is non-degenerate.

    Raises
    ------
    DegenerateMarketError
        If a nonzero long-only portfolio has zero MAD.
    """
    t0 = time.perf_counter()
    if check:
        check_nondegenerate(scn)
    n, T = scn.n, scn.T
    if lam is None:
        lam = risk.mad(scn, np.full(n, 1.0 / n)) / n
    if not lam > 0:
        raise ValueError("lam must be positive")
    prob = BarrierProblem(scn.deviations, 1.0 / T, log_coef=float(lam))
    sched = BarrierSchedule(max_newton=max_iter)
    xbar, status = solve_barrier(prob, np.full(n, 1.0 / n), tol=tol * lam, schedule=sched)
    info = {"lam": float(lam), "scale": float(xbar.sum())}
    x = xbar / xbar.sum()
    if polish:
        x = _polish(scn, x, info)
    return make_report(scn, x, "log_obj", status, time.perf_counter() - t0, **info)


def solve_log_constr(scn, c=None, tol=1e-10, max_iter=400, budget=False, polish=True,
                     check=True):
    """Risk parity via ``min MAD(x)  s.t.  sum_i ln x_i >= c``.

    Parameters
    ----------
    c : float, optional
        Log-level; defaults to ``-n ln n``, the level of the EW portfolio.
    budget : bool
        Also impose ``sum x = 1``. The problem is then no longer a risk parity
        formulation: with ``c = -n ln n`` the only feasible point is EW (Jensen),
        and larger ``c`` is infeasible.

    Notes
    -----
    ``info["c_star"]`` holds the equivalent level ``c - n ln(sum xbar)`` of the
    normalized solution.
    """
    t0 = time.perf_counter()
    n, T = scn.n, scn.T
    if c is None:
        c = -n * math.log(n)
    c = float(c)
    ew_level = -n * math.log(n)
    if budget:
        gap = c - ew_level
        if gap > 1e-12 * max(1.0, abs(ew_level)):
            raise SolverError(
                f"sum ln x >= {c} with sum x = 1 is infeasible: the largest attainable "
                f"level is -n ln n = {ew_level}",
                report=SolveStatus(INFEASIBLE),
            )
        if gap >= -1e-12 * max(1.0, abs(ew_level)):
            x = np.full(n, 1.0 / n)
            status = SolveStatus(OPTIMAL, 0, 0.0, risk.mad(scn, x),
                                 "EW is the only feasible point")
            return make_report(scn, x, "log_constr", status, time.perf_counter() - t0,
                               c=c, c_star=c, budget=True)
    if check:
        check_nondegenerate(scn)
    sched = BarrierSchedule(max_newton=max_iter)
    if budget:
        prob = BarrierProblem(scn.deviations, 1.0 / T, log_floor=c,
                              A_eq=np.ones((1, n)), b_eq=np.ones(1))
        x0 = np.full(n, 1.0 / n)
    else:
        prob = BarrierProblem(scn.deviations, 1.0 / T, log_floor=c)
        x0 = np.full(n, math.exp(c / n + 0.1))
    scale = max(risk.mad(scn, x0), 1e-300)
    xbar, status = solve_barrier(prob, x0, tol=tol * scale, schedule=sched)
    total = float(xbar.sum())
    info = {"c": c, "c_star": c - n * math.log(total), "budget": bool(budget)}
    x = xbar / total
    if polish and not budget:
        x = _polish(scn, x, info)
    return make_report(scn, x, "log_constr", status, time.perf_counter() - t0, **info)
