from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import risk
from ..optim.lp import OPTIMAL, SolveStatus
from ..risk import PortfolioWeights

METHODS = ("log_obj", "log_constr", "ls_rel", "ls_abs", "soe_1", "soe_2",
           "closed_form", "vol_rp", "min_mad", "min_var", "ew")
RP_METHODS = ("log_obj", "log_constr", "ls_rel", "ls_abs", "soe_1", "soe_2")

DEGENERATE = "degenerate"


@dataclass
class SolverReport:
    weights: PortfolioWeights
    method: str
    f_value: float
    mad_value: float
    mean_abs_dev: float
    max_abs_dev: float
    wall_time: float
    status: SolveStatus
    info: dict = field(default_factory=dict)

    @property
    def x(self):
        return self.weights.x

    @property
    def n(self):
        return self.weights.x.size

    def row(self):
        """``(method, F, MAD, MeanAbsDev, MaxAbsDev, 1/n, seconds)``."""
        return (self.method, self.f_value, self.mad_value, self.mean_abs_dev,
                self.max_abs_dev, 1.0 / self.n, self.wall_time)

    def to_dict(self, timing=True):
        return {
            "method": self.method,
            "weights": [float(v) for v in self.x],
            "f": _num(self.f_value),
            "mad": _num(self.mad_value),
            "mean_abs_dev": _num(self.mean_abs_dev),
            "max_abs_dev": _num(self.max_abs_dev),
            "one_over_n": 1.0 / self.n,
            "time_secs": self.wall_time if timing else 0.0,
            "status": {
                "status": self.status.status,
                "iterations": self.status.iterations,
                "kkt_residual": _num(self.status.kkt_residual),
                "message": self.status.message,
            },
            "info": {k: _jsonable(v) for k, v in sorted(self.info.items())},
        }


def _num(v):
    return None if v is None or (isinstance(v, float) and not math.isfinite(v)) else float(v)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(u) for u in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(u) for u in v]
    if isinstance(v, (np.floating, float)):
        return _num(float(v))
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def diagnostics(scn, x, tie_tol=risk.TIE_TOL):
    """``(F, MAD, MeanAbsDev, MaxAbsDev)`` using the most balanced feasible RC vector.

    A portfolio is risk parity when *some* subgradient equalizes the
    contributions, so tie scenarios get the balancing selection.
    """
    m = risk.mad(scn, x)
    if not m > 0.0:
        return math.nan, m, math.nan, math.nan
    rc = risk.risk_contributions(scn, x, tie_rule="balanced", tie_tol=tie_tol)
    f, mean_dev, max_dev = risk.rc_accuracy(rc.rc / m)
    return f, m, mean_dev, max_dev


def make_report(scn, x, method, status=None, wall_time=0.0, **info):
    x = np.asarray(x, dtype=np.float64)
    x = np.where(x < 0.0, 0.0, x)
    w = PortfolioWeights(x / x.sum())
    f, m, mean_dev, max_dev = diagnostics(scn, w.x)
    status = status or SolveStatus(OPTIMAL, 0, 0.0)
    return SolverReport(w, method, f, m, mean_dev, max_dev, wall_time, status, info)
