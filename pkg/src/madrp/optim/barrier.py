"""Barrier method for ``w * sum_t |D_t x| - lam * sum_i ln x_i`` under linear constraints.

The absolute values are lifted into epigraph variables ``y_t >= |D_t x|``;
the only nonlinearity left is logarithmic, so a plain Newton barrier method is
enough. The ``T`` epigraph variables are eliminated in every Newton step, so
each step costs one ``n x n`` solve.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .lp import ITERATION_LIMIT, OPTIMAL, SolveStatus


@dataclass
class BarrierProblem:
    """Objective ``weight * sum|D x| - log_coef * sum ln x``.

    ``log_floor`` adds the constraint ``sum ln x >= log_floor``; ``A_eq``/``b_eq``
    add linear equalities (the starting point must satisfy them).
    """

    D: np.ndarray
    weight: float
    log_coef: float = 0.0
    log_floor: Optional[float] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None

    def objective(self, x):
        val = self.weight * float(np.abs(self.D @ x).sum())
        if self.log_coef:
            val -= self.log_coef * float(np.log(x).sum())
        return val


@dataclass
class BarrierSchedule:
    mu_factor: float = 0.1
    max_newton: int = 400
    max_inner: int = 50
    inner_tol: float = 1e-10  # on the squared Newton decrement, relative to mu


def _phi(prob, mu, x, y, d):
    a, b = y - d, y + d
    if np.any(x <= 0) or np.any(a <= 0) or np.any(b <= 0):
        return np.inf
    val = prob.weight * y.sum() - mu * (np.log(a).sum() + np.log(b).sum())
    lx = np.log(x)
    if prob.log_coef:
        val -= prob.log_coef * lx.sum()
    if prob.log_floor is not None:
        g = lx.sum() - prob.log_floor
        if g <= 0:
            return np.inf
        val -= mu * np.log(g)
    return val


def solve_barrier(prob: BarrierProblem, x0, tol=1e-10, schedule: BarrierSchedule = None):
    """Follow the central path down to a duality-gap bound ``m * mu <= tol``.

    Returns ``(x, SolveStatus)``; ``status.history`` holds ``(mu, objective)``
    at each centred point.
    """
    sched = schedule or BarrierSchedule()
    D = np.ascontiguousarray(prob.D, dtype=np.float64)
    T, n = D.shape
    w, lam = float(prob.weight), float(prob.log_coef)
    floor = prob.log_floor
    Aeq = None if prob.A_eq is None else np.atleast_2d(np.asarray(prob.A_eq, float))
    x = np.asarray(x0, dtype=np.float64).copy()
    if np.any(x <= 0):
        raise ValueError("barrier start must be strictly positive")
    if floor is not None and np.log(x).sum() <= floor:
        raise ValueError("barrier start violates the logarithmic constraint")
    if Aeq is not None and np.max(np.abs(Aeq @ x - prob.b_eq)) > 1e-9:
        raise ValueError("barrier start violates the equality constraints")

    d = D @ x
    s0 = float(np.mean(np.abs(d))) or 1.0
    y = np.abs(d) + s0
    m_bar = 2 * T + (1 if floor is not None else 0)
    mu = max(w * s0, tol / m_bar)
    history, newton = [], 0
    dec2 = np.inf

    while True:
        for _inner in range(sched.max_inner):
            a, b = y - d, y + d
    
            ia, ib = 1.0 / a, 1.0 / b
            gy = w - mu * (ia + ib)
            gx = mu * (D.T @ (ia - ib))
            hx = np.zeros(n)
            if lam:
                gx -= lam / x
                hx += lam / x ** 2
            extra = None
            if floor is not None:
                gl = np.log(x).sum() - floor
                gx -= mu / (gl * x)
                hx += mu / (gl * x ** 2)
                extra = (mu / gl ** 2) ** 0.5 / x  # rank-one term u u^T
            h = mu * (ia ** 2 + ib ** 2)
            e = mu * (ib ** 2 - ia ** 2)
            coef = 4.0 * mu * mu * (ia * ib) ** 2 / h  # h - e^2/h, written stably
            S = (D.T * coef) @ D
            S[np.diag_indices(n)] += hx
            if extra is not None:
                S += np.outer(extra, extra)
            rhs = -gx + D.T @ (e * gy / h)
            if Aeq is None:
                try:
                    # near a kink S can be nearly singular; the line search
                    # guards the step, so the conditioning warning is noise
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore", sla.LinAlgWarning)
                        dx = sla.solve(S, rhs, assume_a="pos", check_finite=False)
                except (np.linalg.LinAlgError, ValueError):
                    dx = np.linalg.lstsq(S, rhs, rcond=None)[0]
            else:
                k = Aeq.shape[0]
                K = np.block([[S, Aeq.T], [Aeq, np.zeros((k, k))]])
                sol = np.linalg.lstsq(K, np.concatenate([rhs, np.zeros(k)]), rcond=None)[0]
                dx = sol[:n]
            dd = D @ dx
            dy = -(gy + e * dd) / h
            slope = float(gx @ dx + gy @ dy)
            dec2 = -slope
            newton += 1
            if dec2 <= sched.inner_tol * mu or newton >= sched.max_newton:
                break
            phi0 = _phi(prob, mu, x, y, d)
            t = 1.0
            while True:
                xn, yn = x + t * dx, y + t * dy
                dn = d + t * dd
                phin = _phi(prob, mu, xn, yn, dn)
                if phin <= phi0 + 0.25 * t * slope or t < 1e-14:
                    break
                t *= 0.5
            if not np.isfinite(phin):
                break
            x, y, d = xn, yn, dn
        history.append((mu, prob.objective(x)))
        gap = m_bar * mu
        if gap <= tol or newton >= sched.max_newton:
            break
        mu *= sched.mu_factor

    ok = gap <= tol and dec2 <= max(sched.inner_tol * mu, 1e-30) * 10
    status = SolveStatus(
        OPTIMAL if gap <= tol else ITERATION_LIMIT,
        iterations=newton,
        kkt_residual=float(gap),
        objective=prob.objective(x),
        message="" if ok else "centering not fully converged",
        history=history,
    )
    return x, status
