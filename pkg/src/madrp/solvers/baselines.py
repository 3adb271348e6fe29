"""Comparison strategies: minimum MAD, minimum variance, volatility risk parity, EW."""
from __future__ import annotations

import time

import numpy as np

from .. import risk
from ..errors import DegenerateMarketError, SolverError
from ..optim import LinearProgram, SolveStatus, project_simplex, solve_lp
from ..optim.lp import ITERATION_LIMIT, OPTIMAL
from .report import make_report


def min_mad_lp(scn):
    """``min (1/T) sum(p + m)  s.t.  D x - p + m = 0,  sum x = 1,  x, p, m >= 0``."""
    T, n = scn.T, scn.n
    D = scn.deviations
    c = np.concatenate([np.zeros(n), np.full(2 * T, 1.0 / T)])
    A = np.zeros((T + 1, n + 2 * T))
    A[:T, :n] = D
    A[:T, n:n + T] = -np.eye(T)
    A[:T, n + T:] = np.eye(T)
    A[T, :n] = 1.0
    b = np.zeros(T + 1)
    b[T] = 1.0
    return LinearProgram(c, A_eq=A, b_eq=b)


def solve_min_mad(scn, tol=1e-10, max_iter=200):
    t0 = time.perf_counter()
    z, status = solve_lp(min_mad_lp(scn), tol=tol, max_iter=max_iter)
    wall = time.perf_counter() - t0
    if not status.ok:
        raise SolverError(f"minimum-MAD LP ended with status {status.status}: {status.message}")
    x = np.clip(z[:scn.n], 0.0, None)
    return make_report(scn, x, "min_mad", status, wall, lp_objective=status.objective)


def check_nondegenerate(scn, rel_tol=1e-9):
    """Raise unless every nonzero long-only portfolio has positive MAD.

    Uniqueness of the risk parity portfolio needs this. Constant assets are
    caught directly, the general case via the minimum-MAD LP.
    """
    const = scn.constant_assets
    if const:
        raise DegenerateMarketError(
            f"assets {const} are constant: a nonzero portfolio has zero MAD, "
            "so the MAD risk parity portfolio is not unique"
        )
    z, status = solve_lp(min_mad_lp(scn), tol=1e-12)
    floor = rel_tol * float(np.mean(scn.asset_mads))
    if status.ok and status.objective <= floor:
        x = np.clip(z[:scn.n], 0.0, None)
        raise DegenerateMarketError(
            "some nonzero long-only portfolio has zero MAD "
            f"(minimum MAD {status.objective:.3g} at {np.round(x / x.sum(), 6).tolist()}); "
            "the MAD risk parity portfolio is not unique"
        )
    return float(status.objective) if status.ok else None


def solve_ew(n):
    """Equal weights. Takes an asset count or a ScenarioMatrix (for diagnostics)."""
    scn = None if isinstance(n, (int, np.integer)) else n
    k = int(n) if scn is None else scn.n
    if k < 1:
        raise ValueError("need at least one asset")
    x = np.full(k, 1.0 / k)
    if scn is None:
        from .report import SolverReport
        nan = float("nan")
        return SolverReport(risk.PortfolioWeights(x), "ew", nan, nan, nan, nan, 0.0,
                            SolveStatus(OPTIMAL))
    return make_report(scn, x, "ew")


def solve_closed_form(scn):
    t0 = time.perf_counter()
    w = risk.closed_form_rp(scn)
    return make_report(scn, w.x, "closed_form", wall_time=time.perf_counter() - t0)


# ------------------------------------------------------------ minimum variance


def _support_qp(S, support):
    """Minimize x^T S x on the face {sum x = 1, x_j = 0 off support}."""
    idx = np.flatnonzero(support)
    k = idx.size
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = 2.0 * S[np.ix_(idx, idx)]
    K[:k, k] = -1.0
    K[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    x = np.zeros(S.shape[0])
    x[idx] = sol[:k]
    return x


def _proj_residual(S, x, L):
    grad = 2.0 * S @ x
    return float(np.max(np.abs(x - project_simplex(x - grad / L))))


def solve_min_var(scn, tol=1e-10, max_iter=50000):
    """Long-only global minimum variance by accelerated projected gradient.

    Once the active set settles, the equality-constrained QP on the support is
    solved directly and accepted if it passes the projected-gradient test.
    """
    t0 = time.perf_counter()
    S = scn.covariance
    n = scn.n
    L = 2.0 * float(np.linalg.eigvalsh(S)[-1])
    if L <= 0.0:
        x = np.full(n, 1.0 / n)
        status = SolveStatus(OPTIMAL, 0, 0.0, 0.0, "zero covariance: every portfolio is optimal")
        return make_report(scn, x, "min_var", status, time.perf_counter() - t0, unique=False)
    x = np.full(n, 1.0 / n)
    yk, tk = x.copy(), 1.0
    support = x > 0
    stable = 0
    res = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        xn = project_simplex(yk - 2.0 * (S @ yk) / L)
        tn = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        if (xn - x) @ (yk - xn) > 0:  # adaptive restart
            yk, tk = xn.copy(), 1.0
        else:
            yk = xn + ((tk - 1.0) / tn) * (xn - x)
            tk = tn
        new_support = xn > 0
        stable = stable + 1 if np.array_equal(new_support, support) else 0
        support, x = new_support, xn
        if stable >= 20 or it % 200 == 0:
            cand = _support_qp(S, support)
            if np.all(cand >= -1e-15):
                cand = np.clip(cand, 0.0, None)
                cand /= cand.sum()
                r = _proj_residual(S, cand, L)
                if r <= tol:
                    x, res = cand, r
                    break
            stable = 0
        res = _proj_residual(S, x, L)
        if res <= tol:
            break
    state = OPTIMAL if res <= tol else ITERATION_LIMIT
    status = SolveStatus(state, it, res, float(x @ S @ x))
    unique = _unique_on_face(S, x)
    if not unique:
        status.message = "non-unique optimum: variance is flat along the optimal face"
    return make_report(scn, x, "min_var", status, time.perf_counter() - t0, unique=unique)


def _unique_on_face(S, x, rel=1e-10):
    idx = np.flatnonzero(x > 0)
    k = idx.size
    if k <= 1:
        return True
    Ss = S[np.ix_(idx, idx)]
    # basis of {v : sum v = 0} on the support
    Q = np.linalg.qr(np.vstack([np.ones(k), np.eye(k)[:-1]]).T)[0][:, 1:]
    ev = np.linalg.eigvalsh(Q.T @ Ss @ Q)
    return bool(ev[0] > rel * max(float(np.trace(Ss)), 1e-300))


# ------------------------------------------------------ volatility risk parity


def solve_vol_rp(scn, tol=1e-12, max_iter=200):
    """Long-only equal volatility contributions.

    Minimizes ``x^T S x / 2 - (1/n) sum ln x`` by damped Newton; its
    stationarity condition is ``x_i (S x)_i = 1/n`` for every i, and the
    normalized minimizer is the volatility risk parity portfolio.
    """
    t0 = time.perf_counter()
    S = scn.covariance
    n = scn.n
    var = np.diag(S)
    if np.any(var <= 0.0):
        zero = [int(i) for i in np.flatnonzero(var <= 0.0)]
        raise DegenerateMarketError(f"assets {zero} have zero variance")
    b = 1.0 / n
    x = 1.0 / np.sqrt(var)
    x *= np.sqrt(b * n / float(x @ S @ x))

    def f(v):
        return 0.5 * v @ S @ v - b * np.log(v).sum()

    it = 0
    res = np.inf
    for it in range(1, max_iter + 1):
        Sx = S @ x
        grad = Sx - b / x
        res = float(np.max(np.abs(x * Sx - b)) / b)
        if res <= tol:
            break
        H = S + np.diag(b / x ** 2)
        step = -np.linalg.solve(H, grad)
        t = 1.0
        while np.any(x + t * step <= 0):
            t *= 0.5
        f0 = f(x)
        # near the solution f stops resolving the decrease, so a step that
        # shrinks the stationarity residual is accepted as well
        while t > 1e-16:
            xn = x + t * step
            if f(xn) <= f0 + 1e-4 * t * (grad @ step):
                break
            if np.max(np.abs(xn * (S @ xn) - b)) / b < 0.5 * res:
                break
            t *= 0.5
        x = x + t * step
    state = OPTIMAL if res <= tol else ITERATION_LIMIT
    status = SolveStatus(state, it, res)
    w = x / x.sum()
    rc = w * (S @ w)
    spread = float((rc.max() - rc.min()) / rc.mean())
    return make_report(scn, w, "vol_rp", status, time.perf_counter() - t0,
                       vol_rc_spread=spread)
