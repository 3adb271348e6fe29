"""Pure numpy versions of the scenario kernels (import-time fallback)."""
import numpy as np

BACKEND = "numpy"


def deviations(D, x):
    return D @ x


def abs_sums(d):
    return float(np.sum(d[d > 0.0])), float(-np.sum(d[d < 0.0]))


def sign_select(d, tie_abs, rule):
    ties = np.abs(d) <= tie_abs
    s = np.where(d > 0.0, 1.0, -1.0)
    s[ties] = {1: 1.0, 2: -1.0}.get(rule, 0.0)
    return s, ties


def signed_colmean(D, s):
    return (s @ D) / D.shape[0]


def drawdowns(wealth):
    wealth = np.asarray(wealth, dtype=float)
    if wealth.size == 0:
        return np.zeros(0)
    peak = np.maximum.accumulate(wealth)
    return (wealth - peak) / peak


def worst_pair_product(D):
    hi = np.where(D > 0.0, D, 0.0)
    lo = np.where(D < 0.0, D, 0.0)
    ihi = hi.argmax(axis=1)
    ilo = lo.argmin(axis=1)
    prod = hi.max(axis=1) * lo.min(axis=1)
    valid = (hi.max(axis=1) > 0.0) & (lo.min(axis=1) < 0.0)
    if not valid.any():
        return 0.0, -1, -1, -1
    prod = np.where(valid, prod, np.inf)
    t = int(prod.argmin())
    return float(prod[t]), t, int(ihi[t]), int(ilo[t])


def sign_consistent(d, s, tol_abs):
    pos = s > 0.0
    neg = s < 0.0
    zero = ~(pos | neg)
    return bool(
        np.all(d[pos] >= -tol_abs)
        and np.all(d[neg] <= tol_abs)
        and np.all(np.abs(d[zero]) <= tol_abs)
    )
