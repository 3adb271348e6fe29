"""Portfolio MAD, its subdifferential and per-asset risk contributions.

All expectations are over the ``T`` equiprobable scenarios of a
:class:`~madrp.scenarios.ScenarioMatrix` (population ``1/T`` convention).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import lsq_linear

from . import kernels
from .errors import DegenerateMarketError, DimensionError, NotAdditiveError
from .scenarios import ScenarioMatrix

# relative tie threshold: |d_t| <= TIE_TOL * max_t |d_t|
TIE_TOL = 1e-12
TIE_RULES = ("zero", "plus", "minus", "balanced")


@dataclass(frozen=True)
class PortfolioWeights:
    x: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64, copy=True).reshape(-1)
        if self.normalized:
            if abs(x.sum() - 1.0) > 1e-10 or np.any(x < 0.0):
                raise ValueError("normalized weights must be nonnegative and sum to 1")
        elif np.any(x <= 0.0):
            raise ValueError("pre-normalization weights must be strictly positive")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @classmethod
    def from_positive(cls, v):
        v = np.asarray(v, dtype=np.float64)
        return cls(v / v.sum(), normalized=True)

    def __array__(self, dtype=None, copy=None):
        return self.x if dtype is None else self.x.astype(dtype)

    def __len__(self):
        return self.x.size


@dataclass(frozen=True)
class SubgradientSelection:
    s: np.ndarray
    tie_scenarios: tuple = ()


@dataclass(frozen=True)
class RiskContributionVector:
    rc: np.ndarray
    total: float
    selection: Optional[SubgradientSelection] = field(default=None, repr=False)

    @property
    def relative(self):
        return self.rc / self.total


def _check(scn: ScenarioMatrix, x):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size != scn.n:
        raise DimensionError(f"weights have {x.size} entries, market has {scn.n} assets")
    return x


def portfolio_deviations(scn, x):
    """``(r_t - mu)^T x`` for every scenario."""
    return kernels.deviations(scn.deviations, _check(scn, x))


def mad(scn: ScenarioMatrix, x) -> float:
    """Mean absolute deviation of the portfolio return ``R(x)``."""
    pos, neg = kernels.abs_sums(portfolio_deviations(scn, x))
    return (pos + neg) / scn.T


def msad(scn: ScenarioMatrix, x) -> float:
    """Mean semi-absolute (upside) deviation of ``R(x)``.

    A centred variable has equal positive and negative mass, so both parts are
    averaged; the result is bit-for-bit half of :func:`mad`.
    """
    pos, neg = kernels.abs_sums(portfolio_deviations(scn, x))
    return (0.5 * (pos + neg)) / scn.T


def volatility(scn: ScenarioMatrix, x) -> float:
    """Population standard deviation of ``R(x)`` (not annualized)."""
    d = portfolio_deviations(scn, x)
    return float(np.sqrt(np.dot(d, d) / scn.T))


def rho_mad(scn: ScenarioMatrix, x) -> float:
    """Risk measure ``E[-R(x)] + MAD(x)`` paired with MAD.

    It is coherent only on return laws where ``MAD <= E[R] - inf R``. That
    bound always holds for MSAD but can fail for MAD on right-skewed laws
    (see ``tests/test_risk.py``); ``E[-R] + MSAD`` is the always-coherent pairing.
    """
    x = _check(scn, x)
    return -float(scn.means @ x) + mad(scn, x)


def _tie_threshold(d, tie_tol):
    return tie_tol * float(np.max(np.abs(d))) if d.size else 0.0


def _balanced_ties(D, x, d, s, ties, T):
    """Choose ``s`` on tie scenarios (within [-1, 1]) to equalize ``x_i * g_i``."""
    k = np.flatnonzero(ties)
    if k.size == 0:
        return s
    total = float(np.abs(d).sum()) / T
    n = x.size
    if total <= 0.0:
        return s
    g0 = kernels.signed_colmean(D, s)  # tie entries of s are 0 here
    A = (x[:, None] * D[k].T) / (T * total)
    b = 1.0 / n - x * g0 / total
    sol = lsq_linear(A, b, bounds=(-1.0, 1.0), method="bvls", tol=1e-15)
    s = s.copy()
    s[k] = np.clip(sol.x, -1.0, 1.0)
    return s


def mad_subgradient(scn: ScenarioMatrix, x, tie_rule="zero", tie_tol=TIE_TOL):
    """A subgradient of MAD at ``x`` and the scenario sign selection behind it.

    Outside ties ``s_t = sign(d_t)``; on ties ``tie_rule`` picks ``0``, ``+1``,
    ``-1`` or (``"balanced"``) the point of [-1, 1] that makes the resulting
    risk contributions as equal as possible.
    """
    if tie_rule not in TIE_RULES:
        raise ValueError(f"tie_rule must be one of {TIE_RULES}")
    x = _check(scn, x)
    D = scn.deviations
    d = kernels.deviations(D, x)
    base = "zero" if tie_rule == "balanced" else tie_rule
    s, ties = kernels.sign_select(d, _tie_threshold(d, tie_tol), base)
    if tie_rule == "balanced":
        s = _balanced_ties(D, x, d, s, ties, scn.T)
    g = kernels.signed_colmean(D, s)
    return g, SubgradientSelection(s, tuple(int(t) for t in np.flatnonzero(ties)))


def risk_contributions(scn: ScenarioMatrix, x, tie_rule="zero", tie_tol=TIE_TOL):
    """``RC_i = x_i * s_i(x)``; the entries sum to MAD(x) (generalized Euler)."""
    x = _check(scn, x)
    g, sel = mad_subgradient(scn, x, tie_rule, tie_tol)
    rc = x * g
    return RiskContributionVector(rc, float(np.sum(rc)), sel)


def rc_accuracy(relative_rc):
    """``(F, MeanAbsDev, MaxAbsDev)`` of relative contributions against ``1/n``."""
    rel = np.asarray(relative_rc, dtype=np.float64)
    dev = rel - 1.0 / rel.size
    return float(dev @ dev), float(np.mean(np.abs(dev))), float(np.max(np.abs(dev)))


class AdditivityCheck(NamedTuple):
    additive: bool
    witness: Optional[tuple]  # (t, i, j), 0-based, when not additive

    def __bool__(self):
        return self.additive


def is_additive(scn: ScenarioMatrix, tol=0.0) -> AdditivityCheck:
    """Pairwise sign agreement ``(r_it - mu_i)(r_jt - mu_j) >= -tol`` for all t, i != j."""
    if scn.n < 2:
        raise DimensionError("additivity is a pairwise condition; need n >= 2")
    worst, t, i, j = kernels.worst_pair_product(scn.deviations)
    if t >= 0 and worst < -tol:
        i, j = sorted((int(i), int(j)))
        return AdditivityCheck(False, (int(t), i, j))
    return AdditivityCheck(True, None)


def closed_form_rp(scn: ScenarioMatrix, tol=1e-12) -> PortfolioWeights:
    """Inverse-MAD weights, the risk parity portfolio when MAD is additive."""
    check = is_additive(scn, tol)
    if not check:
        t, i, j = check.witness
        raise NotAdditiveError(
            "MAD is not additive here: the closed form needs pairwise sign agreement of deviations "
            f"(violated at scenario {t}, assets {i} and {j})",
            witness=check.witness,
        )
    m = scn.asset_mads
    if np.any(m <= 0.0):
        zero = [int(i) for i in np.flatnonzero(m <= 0.0)]
        raise DegenerateMarketError(f"assets {zero} have zero MAD; inverse-MAD weights undefined")
    inv = 1.0 / m
    return PortfolioWeights(inv / inv.sum())
