"""Dense primal-dual interior point method for linear programs.

Homogeneous self-dual embedding with Mehrotra predictor-corrector steps, so
infeasible and unbounded problems are detected from the embedding instead of
by iterate blow-up.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


@dataclass
class SolveStatus:
    status: str
    iterations: int = 0
    kkt_residual: float = float("nan")
    objective: float = float("nan")
    message: str = ""
    history: list = field(default_factory=list)

    @property
    def ok(self):
        return self.status == OPTIMAL


@dataclass
class LinearProgram:
    """``min c@x  s.t.  A_eq@x = b_eq,  A_ub@x <= b_ub,  lb <= x <= ub``."""

    c: np.ndarray
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64).reshape(-1)
        n = self.c.size
        self.A_eq, self.b_eq = _pair(self.A_eq, self.b_eq, n, "equality")
        self.A_ub, self.b_ub = _pair(self.A_ub, self.b_ub, n, "inequality")
        self.lb = np.zeros(n) if self.lb is None else np.broadcast_to(
            np.asarray(self.lb, dtype=np.float64), (n,)).copy()
        self.ub = np.full(n, np.inf) if self.ub is None else np.broadcast_to(
            np.asarray(self.ub, dtype=np.float64), (n,)).copy()
        if np.any(self.lb > self.ub):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def n(self):
        return self.c.size


def _pair(A, b, n, what):
    if A is None:
        return np.zeros((0, n)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if A.shape != (b.size, n):
        raise ValueError(f"{what} constraint shapes {A.shape} / {b.shape} do not match n={n}")
    return A, b


class _Standard:
    """Map a general LP to ``min c@z, A@z = b, z >= 0`` and back."""

    def __init__(self, lp: LinearProgram):
        n = lp.n
        lb, ub = lp.lb, lp.ub
        cols = []  # (kind, j): kind 'lo' z=x-lb, 'hi' z=ub-x, 'free+' / 'free-'
        for j in range(n):
            if np.isfinite(lb[j]):
                cols.append(("lo", j))
            elif np.isfinite(ub[j]):
                cols.append(("hi", j))
            else:
                cols.append(("free+", j))
                cols.append(("free-", j))
        nz = len(cols)
        T = np.zeros((n, nz))  # x = T @ z + shift
        shift = np.zeros(n)
        for k, (kind, j) in enumerate(cols):
            if kind == "lo":
                T[j, k] = 1.0
                shift[j] = lb[j]
            elif kind == "hi":
                T[j, k] = -1.0
                shift[j] = ub[j]
            elif kind == "free+":
                T[j, k] = 1.0
            else:
                T[j, k] = -1.0
        boxed = [k for k, (kind, j) in enumerate(cols)
                 if kind == "lo" and np.isfinite(ub[j])]
        m_eq, m_ub, m_box = lp.A_eq.shape[0], lp.A_ub.shape[0], len(boxed)
        n_slack = m_ub + m_box
        A = np.zeros((m_eq + m_ub + m_box, nz + n_slack))
        b = np.zeros(A.shape[0])
        A[:m_eq, :nz] = lp.A_eq @ T
        b[:m_eq] = lp.b_eq - lp.A_eq @ shift
        A[m_eq:m_eq + m_ub, :nz] = lp.A_ub @ T
        A[m_eq:m_eq + m_ub, nz:nz + m_ub] = np.eye(m_ub)
        b[m_eq:m_eq + m_ub] = lp.b_ub - lp.A_ub @ shift
        for r, k in enumerate(boxed):
            j = cols[k][1]
            A[m_eq + m_ub + r, k] = 1.0
            A[m_eq + m_ub + r, nz + m_ub + r] = 1.0
            b[m_eq + m_ub + r] = ub[j] - lb[j]
        self.A, self.b = A, b
        self.c = np.concatenate([lp.c @ T, np.zeros(n_slack)])
        self.offset = float(lp.c @ shift)
        self.T, self.shift, self.nz = T, shift, nz

    def recover(self, z):
        return self.T @ z[: self.nz] + self.shift


def _factor(M):
    try:
        return ("chol", sla.cho_factor(M, lower=True, check_finite=False))
    except (np.linalg.LinAlgError, ValueError):
        reg = 1e-12 * max(1.0, float(np.max(np.abs(np.diag(M))))) if M.size else 1e-12
        try:
            return ("chol", sla.cho_factor(M + reg * np.eye(M.shape[0]), lower=True,
                                           check_finite=False))
        except (np.linalg.LinAlgError, ValueError):
            return ("lstsq", M)


def _solve(fac, rhs):
    kind, data = fac
    if kind == "chol":
        return sla.cho_solve(data, rhs, check_finite=False)
    return np.linalg.lstsq(data, rhs, rcond=None)[0]


def _max_step(v, dv):
    neg = dv < 0.0
    if not np.any(neg):
        return 1.0
    return float(min(1.0, np.min(-v[neg] / dv[neg])))


def solve_lp(lp: LinearProgram, tol=1e-9, max_iter=200):
    """Solve ``lp``; returns ``(x, SolveStatus)``. Never raises on infeasibility."""
    sf = _Standard(lp)
    A, b, c = sf.A, sf.b, sf.c
    m, n = A.shape
    if n == 0:
        return sf.recover(np.zeros(0)), SolveStatus(OPTIMAL, 0, 0.0, sf.offset)

    x, z = np.ones(n), np.ones(n)
    y = np.zeros(m)
    tau = kappa = 1.0
    nb, nc = np.linalg.norm(b), np.linalg.norm(c)
    status = SolveStatus(ITERATION_LIMIT)

    for it in range(1, max_iter + 1):
        r_p = b * tau - A @ x
        r_d = c * tau - A.T @ y - z
        r_g = c @ x - b @ y + kappa
        mu = (x @ z + tau * kappa) / (n + 1)

        xs, ys = x / tau, y / tau
        rho_p = np.linalg.norm(A @ xs - b) / (1.0 + nb)
        rho_d = np.linalg.norm(A.T @ ys + z / tau - c) / (1.0 + nc)
        pobj, dobj = c @ xs, b @ ys
        rho_g = abs(pobj - dobj) / (1.0 + abs(dobj))
        kkt = max(rho_p, rho_d, rho_g)
        status.history.append(kkt)
        if kkt <= tol:
            return sf.recover(xs), SolveStatus(OPTIMAL, it, kkt, pobj + sf.offset,
                                               history=status.history)
        if tau < tol * max(1.0, kappa) and mu < tol:
            # embedding collapsed to a ray: certificate of infeasibility
            if b @ y > tol:
                return sf.recover(xs), SolveStatus(INFEASIBLE, it, kkt, message="primal infeasible",
                                                   history=status.history)
            if c @ x < -tol:
                return sf.recover(xs), SolveStatus(UNBOUNDED, it, kkt, message="dual infeasible",
                                                   history=status.history)
            return sf.recover(xs), SolveStatus(INFEASIBLE, it, kkt,
                                               message="primal or dual infeasible",
                                               history=status.history)

        Dg = x / z
        M = (A * Dg) @ A.T
        fac = _factor(M)
        q = _solve(fac, b + A @ (Dg * c))
        v_q = Dg * (A.T @ q - c)

        def direction(gamma, r_xs, r_tk):
            eta = 1.0 - gamma
            p = _solve(fac, eta * r_p + A @ (Dg * (eta * r_d - r_xs / x)))
            u = Dg * (A.T @ p - eta * r_d + r_xs / x)
            denom = -c @ v_q + b @ q + kappa / tau
            dtau = (eta * r_g + c @ u - b @ p + r_tk / tau) / denom
            dx = u + v_q * dtau
            dy = p + q * dtau
            dz = (r_xs - z * dx) / x
            dkappa = (r_tk - kappa * dtau) / tau
            return dx, dy, dz, dtau, dkappa

        def step(dx, dz, dtau, dkappa):
            return min(_max_step(x, dx), _max_step(z, dz),
                       _max_step(np.array([tau]), np.array([dtau])),
                       _max_step(np.array([kappa]), np.array([dkappa])))

        # predictor
        dx, dy, dz, dtau, dk = direction(0.0, -x * z, -tau * kappa)
        a_aff = step(dx, dz, dtau, dk)
        mu_aff = ((x + a_aff * dx) @ (z + a_aff * dz)
                  + (tau + a_aff * dtau) * (kappa + a_aff * dk)) / (n + 1)
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
        # corrector
        dx, dy, dz, dtau, dk = direction(
            sigma, sigma * mu - x * z - dx * dz, sigma * mu - tau * kappa - dtau * dk)
        alpha = min(1.0, 0.9995 * step(dx, dz, dtau, dk))
        x = x + alpha * dx
        y = y + alpha * dy
        z = z + alpha * dz
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dk
        # guard against underflow to exactly zero
        x = np.maximum(x, 1e-300)
        z = np.maximum(z, 1e-300)
        tau, kappa = max(tau, 1e-300), max(kappa, 1e-300)

    status.iterations = max_iter
    status.kkt_residual = status.history[-1] if status.history else float("nan")
    status.message = "iteration limit reached"
    return sf.recover(x / tau), status
