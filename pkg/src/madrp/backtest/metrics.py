"""Out-of-sample performance metrics of a daily return series and its wealth path."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .. import kernels
from ..errors import UndefinedMetric

METRIC_NAMES = ("mean_annual", "std_annual", "mdd", "ulcer", "sharpe", "sortino", "turnover",
                "rachev_5", "rachev_10")
METRIC_LABELS = {
    "mean_annual": "Mean", "std_annual": "Std", "mdd": "Mdd", "ulcer": "Ulcer Index",
    "sharpe": "Sharpe Ratio", "sortino": "Sortino Ratio", "turnover": "Turnover",
    "rachev_5": "Rachev 5%", "rachev_10": "Rachev 10%",
}
# +1: larger is better, -1: smaller is better
METRIC_DIRECTION = {
    "mean_annual": 1, "std_annual": -1, "mdd": 1, "ulcer": -1, "sharpe": 1, "sortino": 1,
    "turnover": -1, "rachev_5": 1, "rachev_10": 1,
}


def _series(a, what):
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    if a.size == 0:
        raise ValueError(f"{what} is empty")
    return a


def drawdowns(wealth):
    """``dd_t = (W_t - max_{s<=t} W_s) / max_{s<=t} W_s`` for every entry."""
    return kernels.drawdowns(_series(wealth, "wealth"))


def max_drawdown(wealth) -> float:
    """Most negative drawdown of a wealth path that starts with ``W_0``; 0 if never below a peak."""
    return float(np.min(drawdowns(wealth)))


def ulcer_index(wealth) -> float:
    """Root mean square drawdown over ``t = 1..T``; ``wealth[0]`` is ``W_0``."""
    dd = drawdowns(wealth)[1:]
    if dd.size == 0:
        return 0.0
    return math.sqrt(math.fsum(dd * dd) / dd.size)


def annual_mean(returns, factor=250) -> float:
    return float(np.mean(_series(returns, "returns"))) * factor


def annual_std(returns, factor=250) -> float:
    """Population standard deviation scaled by ``sqrt(factor)``.

    Exactly zero for a constant series (``np.std`` can leave rounding residue there).
    """
    r = _series(returns, "returns")
    if np.all(r == r[0]):
        return 0.0
    return float(np.std(r)) * math.sqrt(factor)


def sharpe(returns, factor=250, risk_free=0.0) -> float:
    """``(annual mean - r_f) / annual std``.

    Raises
    ------
    UndefinedMetric
        For zero-variance returns.
    """
    sd = annual_std(returns, factor)
    if not sd > 0.0:
        raise UndefinedMetric("Sharpe ratio undefined: returns have zero variance")
    return (annual_mean(returns, factor) - risk_free) / sd


def target_downside_deviation(returns, target=0.0) -> float:
    """``sqrt(mean(min(R - target, 0)^2))`` in the units of ``returns``."""
    r = _series(returns, "returns")
    below = np.minimum(r - target, 0.0)
    return math.sqrt(float(np.mean(below * below)))


def sortino(returns, factor=250, risk_free=0.0) -> float:
    """``(annual mean - r_f) / annualized target downside deviation``.

    The daily target is ``r_f / factor``.

    Raises
    ------
    UndefinedMetric
        If no return falls below the target.
    """
    tdd = target_downside_deviation(returns, risk_free / factor) * math.sqrt(factor)
    if not tdd > 0.0:
        raise UndefinedMetric("Sortino ratio undefined: no return below the target")
    return (annual_mean(returns, factor) - risk_free) / tdd


def turnover(weights) -> float:
    """``(1/Q) * sum_q sum_k |x_{q,k} - x_{q-1,k}|`` over ``Q + 1`` weight vectors."""
    W = np.asarray(weights, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] < 2:
        raise ValueError("turnover needs at least two weight vectors")
    return float(np.sum(np.abs(np.diff(W, axis=0)))) / (W.shape[0] - 1)


def tail_count(alpha, T) -> int:
    """``ceil(alpha * T)``, guarded against rounding just above an integer."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    return max(1, math.ceil(alpha * T - 1e-9))


def rachev(returns, alpha=0.05, factor=250, risk_free=0.0) -> float:
    """Upper-tail mean of excess returns over the upper-tail mean of their negatives.

    Both tails hold ``ceil(alpha * T)`` daily observations, boundary sample
    included in full.

    Raises
    ------
    UndefinedMetric
        If the loss-tail mean is not positive.
    """
    ex = _series(returns, "returns") - risk_free / factor
    k = tail_count(alpha, ex.size)
    up = np.sort(ex)[::-1][:k]
    down = np.sort(-ex)[::-1][:k]
    den = math.fsum(down) / k
    if not den > 0.0:
        raise UndefinedMetric("Rachev ratio undefined: the loss tail mean is not positive")
    return (math.fsum(up) / k) / den


@dataclass(frozen=True)
class MetricSet:
    mean_annual: float
    std_annual: float
    mdd: float
    ulcer: float
    sharpe: Optional[float]
    sortino: Optional[float]
    turnover: float
    rachev_5: Optional[float]
    rachev_10: Optional[float]
    suppress_ratios: bool = False  # mean below r_f: tables print "--"

    def to_dict(self):
        return asdict(self)

    def display(self, name, digits=4):
        v = getattr(self, name)
        if name in ("sharpe", "sortino") and self.suppress_ratios:
            return "--"
        if v is None:
            return "n/a"
        return f"{v:.{digits}f}"


def _maybe(fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except UndefinedMetric:
        return None


def metric_set(returns, wealth, weights, factor=250, risk_free=0.0) -> MetricSet:
    """All nine metrics; undefined ratios are ``None``."""
    W = np.asarray(weights, dtype=np.float64)
    mean = annual_mean(returns, factor)
    return MetricSet(
        mean_annual=mean,
        std_annual=annual_std(returns, factor),
        mdd=max_drawdown(wealth),
        ulcer=ulcer_index(wealth),
        sharpe=_maybe(sharpe, returns, factor, risk_free),
        sortino=_maybe(sortino, returns, factor, risk_free),
        turnover=turnover(W) if W.ndim == 2 and W.shape[0] >= 2 else 0.0,
        rachev_5=_maybe(rachev, returns, 0.05, factor, risk_free),
        rachev_10=_maybe(rachev, returns, 0.10, factor, risk_free),
        suppress_ratios=mean < risk_free,
    )


def rank_strategies(metrics: dict) -> dict:
    """Per metric, strategy names from best to worst.

    Undefined values go last; ties keep the input order. A metric that is
    identical for all strategies (turnover of a static rule) is still ranked.
    """
    names = list(metrics)
    out = {}
    for m in METRIC_NAMES:
        sign = METRIC_DIRECTION[m]

        def key(item):
            idx, name = item
            v = getattr(metrics[name], m)
            return (v is None, 0.0 if v is None else -sign * v, idx)

        out[m] = [name for _, name in sorted(enumerate(names), key=key)]
    return out
