"""Rolling-window out-of-sample backtest.

At each rebalance date the strategy is calibrated on the trailing
``in_sample_days`` returns and the resulting weights are held (fixed-weight,
no intra-period drift) until the next rebalance.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ..errors import DataError, MadRPError, SolverError
from ..scenarios import PriceSeries, ScenarioMatrix, returns_from_prices
from ..solvers import METHODS, solve
from .metrics import METRIC_LABELS, METRIC_NAMES, MetricSet, metric_set, rank_strategies


@dataclass(frozen=True)
class RollingConfig:
    in_sample_days: int = 250
    out_sample_days: int = 20
    rebalance_days: int = 20
    annualization_factor: int = 250
    risk_free: float = 0.0  # annual rate

    def __post_init__(self):
        for name in ("in_sample_days", "out_sample_days", "rebalance_days",
                     "annualization_factor"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer (got {v!r})")
        if self.out_sample_days < self.rebalance_days:
            raise ValueError(
                f"out_sample_days={self.out_sample_days} < rebalance_days="
                f"{self.rebalance_days} would leave days without a held portfolio")

    @property
    def holding_days(self):
        """Days a portfolio is held: the next rebalance replaces it."""
        return min(self.out_sample_days, self.rebalance_days)

    def required_prices(self):
        return self.in_sample_days + self.out_sample_days + 1


@dataclass
class BacktestResult:
    strategy: str
    config: RollingConfig
    wealth: np.ndarray            # W_0 = 1 followed by one value per out-of-sample day
    oos_returns: np.ndarray
    rebalance_weights: np.ndarray  # (Q + 1) x n
    rebalance_index: list          # return-row index of each rebalance
    metrics: MetricSet
    asset_ids: list = field(default_factory=list)
    dates: Optional[list] = None   # one label per wealth entry when prices carry dates

    @property
    def Q(self):
        return self.rebalance_weights.shape[0] - 1

    def to_dict(self):
        return {
            "config": asdict(self.config),
            "strategy": self.strategy,
            "metrics": self.metrics.to_dict(),
            "wealth": [float(v) for v in self.wealth],
            "rebalance_weights": [[float(v) for v in row] for row in self.rebalance_weights],
            "rebalance_index": [int(i) for i in self.rebalance_index],
            "asset_ids": [str(a) for a in self.asset_ids],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def rebalance_starts(T, cfg: RollingConfig):
    """Return-row indices ``L + q*H`` that still have at least one day to hold."""
    return list(range(cfg.in_sample_days, T, cfg.rebalance_days))


def run_backtest(prices, strategy="ew", cfg: RollingConfig = RollingConfig(), options=None):
    """Run one strategy over a price history.

    Parameters
    ----------
    prices : PriceSeries or ScenarioMatrix
        ``T + 1`` prices (or ``T`` returns) per asset.
    strategy : str
        A solver method name.
    cfg : RollingConfig
    options : dict, optional
        Keyword arguments for the solver.

    Raises
    ------
    DataError
        If the history is shorter than ``in_sample_days + out_sample_days + 1`` prices.
    SolverError
        If the solver fails at some rebalance; the message names the window.
    """
    if strategy not in METHODS:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {METHODS}")
    options = options or {}
    if isinstance(prices, PriceSeries):
        R = returns_from_prices(prices).returns
        ids, dates = list(prices.asset_ids), prices.dates
    else:
        R = np.asarray(prices.returns)
        ids, dates = list(prices.asset_ids), None
    T, n = R.shape
    need = cfg.required_prices()
    if T + 1 < need:
        raise DataError(
            f"backtest needs at least {need} prices (in-sample {cfg.in_sample_days} + "
            f"out-of-sample {cfg.out_sample_days} + 1), got {T + 1}")
    starts = rebalance_starts(T, cfg)
    H = cfg.holding_days
    weights, rets, rows = [], [], []
    for q, s in enumerate(starts):
        if strategy == "ew":
            x = np.full(n, 1.0 / n)
        else:
            window = R[s - cfg.in_sample_days:s]
            try:
                scn = ScenarioMatrix(window, window.mean(axis=0), ids)
                x = solve(scn, strategy, **options).x
            except (MadRPError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
                raise SolverError(
                    f"{strategy} failed at rebalance window {q} (return rows "
                    f"{s - cfg.in_sample_days}..{s - 1}): {exc}") from exc
        weights.append(x)
        hold = R[s:min(s + H, T)]
        rets.append(hold @ x)
        rows.extend(range(s, min(s + H, T)))
    oos = np.concatenate(rets)
    wealth = np.empty(oos.size + 1)
    wealth[0] = 1.0
    for t in range(oos.size):
        wealth[t + 1] = wealth[t] * (1.0 + oos[t])
    W = np.vstack(weights)
    metrics = metric_set(oos, wealth, W, cfg.annualization_factor, cfg.risk_free)
    wdates = None
    if dates is not None:
        # price row s is the close before return row s
        wdates = [dates[starts[0]]] + [dates[r + 1] for r in rows]
    return BacktestResult(strategy, cfg, wealth, oos, W, starts, metrics, ids, wdates)


def metrics_table_csv(results: dict) -> str:
    """Metrics as rows and strategies as columns, full precision."""
    names = list(results)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric"] + names)
    for m in METRIC_NAMES:
        row = [m]
        for name in names:
            v = getattr(results[name].metrics, m)
            row.append("" if v is None else repr(float(v)))
        w.writerow(row)
    return buf.getvalue()


def metrics_table_text(results: dict) -> str:
    """Paper-style table with ``--`` for suppressed ratios and per-metric ranks."""
    names = list(results)
    ms = {k: r.metrics for k, r in results.items()}
    ranks = rank_strategies(ms)
    head = [""] + names
    body = []
    for m in METRIC_NAMES:
        row = [METRIC_LABELS[m]]
        for name in names:
            row.append(f"{ms[name].display(m)} ({ranks[m].index(name) + 1})")
        body.append(row)
    widths = [max(len(r[k]) for r in [head] + body) for k in range(len(head))]
    return "\n".join("  ".join(c.ljust(wd) if k == 0 else c.rjust(wd)
                               for k, (c, wd) in enumerate(zip(r, widths)))
                     for r in [head] + body) + "\n"


def wealth_csv(results: dict) -> str:
    """One wealth column per strategy; all results must share the same calendar."""
    names = list(results)
    lengths = {results[k].wealth.size for k in names}
    if len(lengths) != 1:
        raise ValueError("wealth paths have different lengths")
    first = results[names[0]]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + (["date"] if first.dates else []) + names)
    for t in range(first.wealth.size):
        lead = [t] + ([first.dates[t]] if first.dates else [])
        w.writerow(lead + [repr(float(results[k].wealth[t])) for k in names])
    return buf.getvalue()
