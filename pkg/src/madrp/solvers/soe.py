"""Risk parity as a system of equations over scenario sign patterns.

A portfolio ``x`` is risk parity with subgradient entries ``s_t`` restricted to
``{-1, 0, +1}`` when

    x_i * g_i(s) = lam  for all i,   g(s) = (1/T) * sum_t s_t D_t,
    sum x = 1,  x >= 0,
    s_t = +1 => D_t x >= 0,   s_t = -1 => D_t x <= 0,   s_t = 0 => D_t x = 0.

Once ``s`` is fixed the first two lines force ``x = (1/g) / sum(1/g)``, so the
problem is a search over sign patterns. The consistency conditions are exactly
the optimality conditions of the concave problem

    max  Phi(s) = sum_i ln g_i(s)   over  s in [-1, 1]^T,

so a pattern solves the system iff it attains the maximum of ``Phi``. The
search is a depth-first branch-and-bound over the three-way choice
``s_t = v_t - u_t`` (the binary pair of the mixed-integer statement): each node
relaxes its free entries to ``[-1, 1]``, bounds ``Phi`` from above through the
concavity (linearization) inequality, and is discarded when that bound falls
below a value already attained at the root. The big-M implications are
enforced exactly by the consistency test at the leaves, so no big-M constant
enters the arithmetic.

Restricting ties to ``{-1, 0, +1}`` can make the system infeasible even though
a risk parity portfolio exists (its subgradient may need a value strictly
inside ``(-1, 1)`` on a tie scenario). That case is reported as an error,
optionally falling back to ``log_constr``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import SolverError
from ..optim import LinearProgram, SolveStatus, solve_lp
from ..optim.lp import INFEASIBLE, ITERATION_LIMIT, OPTIMAL
from ..risk import TIE_TOL
from .baselines import check_nondegenerate
from .refine import _newton_box
from .report import make_report

FREE = 2  # marker for an unassigned scenario
VARIANTS = ("soe_1", "soe_2")
INFEASIBLE_NOTE = (
    "the sign system may be infeasible even though the MAD risk parity portfolio "
    "exists: at a tie scenario the subgradient can need a value strictly inside "
    "(-1, 1); use log_constr instead"
)


@dataclass
class SignPattern:
    """Scenario signs ``s_t = v_t - u_t``; ``FREE`` marks unassigned scenarios."""

    assignment: np.ndarray

    @property
    def u(self):
        return (self.assignment == -1).astype(np.int8)

    @property
    def v(self):
        return (self.assignment == 1).astype(np.int8)

    @property
    def complete(self):
        return not np.any(self.assignment == FREE)


@dataclass
class SearchStats:
    nodes: int = 0
    pruned_bound: int = 0
    pruned_positivity: int = 0
    leaves: int = 0
    rounding_hits: int = 0


def _phi(B, g0, s):
    g = g0 + B.T @ s
    if not np.all(g > 0):
        return -np.inf, g
    return float(np.log(g).sum()), g


def _upper_bound(B, g0, s):
    """Concavity bound ``Phi(s) + max over the box of grad . (s' - s)``."""
    val, g = _phi(B, g0, s)
    grad = B @ (1.0 / g)
    gain = np.where(grad > 0, (1.0 - s) * grad, (-1.0 - s) * grad)
    return val + float(gain.sum()), val


def _interior_start(B, g0):
    """Free entries in the box with ``g0 + B.T s > 0``, or ``None``."""
    k, n = B.shape
    if np.all(g0 > 0):
        return np.zeros(k)
    if k == 0:
        return None
    # max delta  s.t.  g0 + B.T s >= delta,  -1 <= s <= 1,  delta <= 1
    c = np.zeros(k + 1)
    c[k] = -1.0
    A_ub = np.hstack([-B.T, np.ones((n, 1))])
    lb = np.concatenate([-np.ones(k), [-np.inf]])
    ub = np.concatenate([np.ones(k), [1.0]])
    z, st = solve_lp(LinearProgram(c, A_ub=A_ub, b_ub=g0, lb=lb, ub=ub), tol=1e-12)
    if not st.ok or z[k] <= 0:
        return None
    sk = np.clip(z[:k], -1.0, 1.0)
    return sk if np.all(g0 + B.T @ sk > 0) else None


def _relax(D, assign, s_hint):
    """Maximize ``Phi`` over the free entries of ``assign`` with the rest fixed.

    Returns ``(free_index, s_free, upper_bound)`` or ``None`` when no free
    choice makes every ``g_i`` positive.
    """
    T = D.shape[0]
    free = np.flatnonzero(assign == FREE)
    fixed = np.where(assign == FREE, 0, assign).astype(np.float64)
    g0 = kernels.signed_colmean(D, fixed)
    B = D[free] / T
    s0 = None
    if s_hint is not None:
        s0 = np.clip(s_hint[free], -1.0, 1.0)
        if not np.all(g0 + B.T @ s0 > 0):
            s0 = None
    if s0 is None:
        s0 = _interior_start(B, g0)
        if s0 is None:
            return None
    if free.size:
        out = _newton_box(B, g0, s0)
        if out is None:
            return None
        s0 = out[0]
    ub, _ = _upper_bound(B, g0, s0)
    return free, s0, ub


def _leaf(D, s, variant):
    """Solve the equations for a complete pattern; ``None`` unless ``g > 0``."""
    g = kernels.signed_colmean(D, s)
    if not np.all(g > 0):
        return None
    if variant == "soe_1":
        inv = 1.0 / g
        return inv / inv.sum()
    return _solve_squared(g)


def _solve_squared(g, tol=1e-15, max_iter=100):
    """Newton on ``q_i^2 g_i = lam, sum q^2 = 1`` with sign-free ``q``."""
    n = g.size
    q = np.full(n, 1.0 / np.sqrt(n))
    lam = float(np.mean(g)) / n
    for _ in range(max_iter):
        F = np.concatenate([q * q * g - lam, [q @ q - 1.0]])
        if np.max(np.abs(F)) <= tol * max(lam, 1.0):
            break
        J = np.zeros((n + 1, n + 1))
        J[np.arange(n), np.arange(n)] = 2.0 * q * g
        J[:n, n] = -1.0
        J[n, :n] = 2.0 * q
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        q = q + step[:n]
        lam = lam + step[n]
    x = q * q
    return x / x.sum()


def _check_leaf(D, s, variant):
    x = _leaf(D, s, variant)
    if x is None:
        return None
    d = kernels.deviations(D, x)
    tie = TIE_TOL * float(np.max(np.abs(d)))
    return x if kernels.sign_consistent(d, s, tie) else None


def solve_soe(scn, variant="soe_1", big_M=None, tol=1e-10, max_nodes=20000, max_T=32,
              fallback=False, check=True):
    """Risk parity by branch-and-bound over scenario sign patterns.

    Parameters
    ----------
    scn : ScenarioMatrix
    variant : {"soe_1", "soe_2"}
        ``soe_2`` solves the equations of each complete pattern in the
        sign-free parametrization ``x = q**2`` (Newton on ``q``) instead of
        the closed form.
    big_M : float, optional
        Constant of the mixed-integer statement. Only validated (it must bound
        every ``|D_t x|`` on the simplex, i.e. ``big_M >= max |D|``); the search
        enforces the implications exactly.
    tol : float
        Residual tolerance on ``x_i g_i - lam`` relative to ``lam``.
    max_nodes : int
        Node budget of the search.
    max_T : int
        Largest scenario count accepted.
    fallback : bool
        On infeasibility return the ``log_constr`` solution, with the fallback
        recorded in ``status.message`` and ``info``, instead of raising.

    Raises
    ------
    SolverError
        When no pattern solves the system within the budget.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    t0 = time.perf_counter()
    T, n = scn.T, scn.n
    if T > max_T:
        raise ValueError(f"sign-pattern search is limited to T <= {max_T} scenarios (got T={T})")
    D = scn.deviations
    if big_M is not None and big_M < float(np.max(np.abs(D))):
        raise ValueError(f"big_M={big_M} is below max |D| = {float(np.max(np.abs(D)))}; "
                         "the implications would cut off valid portfolios")
    if check:
        check_nondegenerate(scn)
    norms = np.sqrt(np.einsum("ij,ij->i", D, D))
    stats = SearchStats()

    root_assign = np.full(T, FREE, dtype=np.int64)
    root_assign[norms == 0.0] = 0  # a zero row is a tie for every portfolio
    found = None
    budget_hit = False
    root = _relax(D, root_assign, None)
    target = -np.inf
    if root is not None:
        free, s_free, _ = root
        s_full = root_assign.astype(np.float64)
        s_full[free] = s_free
        g = kernels.signed_colmean(D, s_full)
        target = float(np.log(g).sum())
        slack = 1e-9 * max(1.0, abs(target))
        stack = [(root_assign, s_full)]
        while stack:
            assign, hint = stack.pop()
            stats.nodes += 1
            if stats.nodes > max_nodes:
                budget_hit = True
                break
            rel = _relax(D, assign, hint)
            if rel is None:
                stats.pruned_positivity += 1
                continue
            free, s_free, ub = rel
            if ub < target - slack:
                stats.pruned_bound += 1
                continue
            s_full = assign.astype(np.float64)
            s_full[free] = s_free
            # a relaxed optimum that is already integral is a leaf candidate
            rounded = np.rint(s_full)
            if np.max(np.abs(rounded - s_full), initial=0.0) <= 1e-9:
                x = _check_leaf(D, rounded, variant)
                if x is not None:
                    found = (x, rounded)
                    stats.rounding_hits += int(free.size > 0)
                    break
            if free.size == 0:
                stats.leaves += 1
                continue
            # branch on the free scenario whose relaxed entry is most fractional
            frac = 1.0 - np.abs(s_free)
            pick = int(np.argmax(np.where(frac > 1e-9, frac, -1.0) + 1e-12 * norms[free]))
            t = int(free[pick])
            order = sorted((-1, 0, 1), key=lambda v: abs(v - s_free[pick]))
            for val in reversed(order):  # nearest value popped first
                child = assign.copy()
                child[t] = val
                stack.append((child, s_full))

    wall = time.perf_counter() - t0
    info = {"variant": variant, "nodes": stats.nodes, "pruned_bound": stats.pruned_bound,
            "pruned_positivity": stats.pruned_positivity, "leaves": stats.leaves,
            "relaxation_value": target}
    if found is None:
        state = ITERATION_LIMIT if budget_hit else INFEASIBLE
        why = (f"node budget {max_nodes} exhausted" if budget_hit
               else "no sign pattern in {-1, 0, +1}^T solves the system")
        status = SolveStatus(state, stats.nodes, np.nan, message=f"{why}; {INFEASIBLE_NOTE}")
        if fallback:
            from .logform import solve_log_constr
            rep = solve_log_constr(scn, check=False)
            rep.method = variant
            rep.status.message = f"fell back to log_constr: {why}"
            rep.info.update(info, fallback=True)
            rep.wall_time = time.perf_counter() - t0
            return rep
        raise SolverError(f"{variant}: {why}; {INFEASIBLE_NOTE}", report=status)
    x, s = found
    g = kernels.signed_colmean(D, s)
    lam_vec = x * g
    lam = float(np.mean(lam_vec))
    resid = float(np.max(np.abs(lam_vec - lam)) / lam)
    pattern = SignPattern(s.astype(np.int64))
    state = OPTIMAL if resid <= tol else ITERATION_LIMIT
    status = SolveStatus(state, stats.nodes, resid)
    info.update(lam=lam, ties=[int(t) for t in np.flatnonzero(pattern.assignment == 0)],
                u=pattern.u, v=pattern.v, fallback=False)
    return make_report(scn, x, variant, status, wall, **info)


def adversarial_tie_instance(scale=1.0):
    """Two assets whose risk parity portfolio needs a fractional tie subgradient.

    The risk parity portfolio is ``[0.5, 0.5]``; there the first scenario has
    zero portfolio deviation and the balancing subgradient entry is ``-1/2``,
    so no pattern in ``{-1, 0, +1}^3`` solves the sign system.
    """
    from ..scenarios import ScenarioMatrix

    D = np.array([[1.0, -1.0], [1.0, 1.5], [-2.0, -0.5]]) * scale
    return ScenarioMatrix(D, D.mean(axis=0))
