"""Accuracy and timing comparison of the portfolio construction methods."""
from __future__ import annotations

import csv
import io
import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .. import risk
from ..errors import MadRPError
from ..solvers import METHODS, solve

CSV_HEADER = ("method", "f", "mad", "mean_abs_dev", "max_abs_dev", "one_over_n", "time_secs")


def accuracy_diagnostics(scn, x, tie_rule="balanced", tie_tol=risk.TIE_TOL):
    """``(F, MeanAbsDev, MaxAbsDev)`` of the relative risk contributions at ``x``.

    With ``b = RC / MAD``: ``F = sum (b_i - 1/n)^2``, ``MeanAbsDev`` is the mean
    and ``MaxAbsDev`` the max of ``|b_i - 1/n|``.

    Raises
    ------
    ValueError
        If ``MAD(x) = 0`` (relative contributions are undefined).
    """
    x = np.asarray(x, dtype=np.float64)
    m = risk.mad(scn, x)
    if not m > 0.0:
        raise ValueError("relative risk contributions are undefined when MAD(x) = 0")
    rc = risk.risk_contributions(scn, x, tie_rule=tie_rule, tie_tol=tie_tol)
    return risk.rc_accuracy(rc.rc / m)


@dataclass
class BenchRow:
    method: str
    f_value: float
    mad_value: float
    mean_abs_dev: float
    max_abs_dev: float
    one_over_n: float
    time_secs: float
    weights: Optional[np.ndarray] = None
    error: Optional[str] = None

    @property
    def ok(self):
        return self.error is None

    def csv_fields(self, timing=True):
        t = self.time_secs if timing else 0.0
        return (self.method, _fmt(self.f_value), _fmt(self.mad_value),
                _fmt(self.mean_abs_dev), _fmt(self.max_abs_dev), _fmt(self.one_over_n),
                _fmt(t))


def _fmt(v):
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))


@dataclass
class BenchConfig:
    """Options of a benchmark run.

    ``first_days`` truncates the scenarios to the first rows (the one-year
    protocol uses 250). ``repeats > 1`` reports the median wall time.
    ``parallel`` runs methods on a thread pool; timings are then contended and
    only the accuracy columns are meaningful.
    """

    first_days: Optional[int] = None
    repeats: int = 1
    parallel: bool = False
    options: dict = field(default_factory=dict)  # per-method solver keyword arguments


def _run_one(scn, method, cfg):
    times = []
    try:
        for _ in range(max(1, cfg.repeats)):
            t0 = time.perf_counter()
            rep = solve(scn, method, **cfg.options.get(method, {}))
            times.append(time.perf_counter() - t0)
    except (MadRPError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        nan = math.nan
        return BenchRow(method, nan, nan, nan, nan, 1.0 / scn.n, nan,
                        error=f"{type(exc).__name__}: {exc}")
    return BenchRow(rep.method if rep.method == method else method, rep.f_value,
                    rep.mad_value, rep.mean_abs_dev, rep.max_abs_dev, 1.0 / scn.n,
                    statistics.median(times), weights=rep.x.copy())


def run_bench(scn, methods: Sequence[str], cfg: BenchConfig = BenchConfig()):
    """One :class:`BenchRow` per method, in the given order.

    A failing method gets a row with its error message and NaN diagnostics;
    the remaining methods still run.
    """
    methods = list(methods)
    if not methods:
        raise ValueError("no methods given")
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ValueError(f"unknown methods {unknown}; expected names from {METHODS}")
    if cfg.first_days is not None:
        if cfg.first_days < 2:
            raise ValueError("first_days must be at least 2")
        scn = scn.window(0, min(cfg.first_days, scn.T))
    if cfg.parallel:
        with ThreadPoolExecutor() as pool:
            return list(pool.map(lambda m: _run_one(scn, m, cfg), methods))
    return [_run_one(scn, m, cfg) for m in methods]


def rows_to_csv(rows, timing=True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.csv_fields(timing))
    return buf.getvalue()


def rows_to_text(rows, timing=True) -> str:
    """Aligned table in the column order of the CSV report."""
    head = ("Method", "F(x)", "MAD(x)", "MeanAbsDev", "MaxAbsDev", "1/n", "Time (s)")
    body = []
    for r in rows:
        if r.error:
            body.append((r.method, "failed", "", "", "", f"{r.one_over_n:.4g}", ""))
            continue
        t = r.time_secs if timing else 0.0
        body.append((r.method, f"{r.f_value:.3e}", f"{r.mad_value:.6g}",
                     f"{r.mean_abs_dev:.3e}", f"{r.max_abs_dev:.3e}",
                     f"{r.one_over_n:.4g}", f"{t:.4f}"))
    widths = [max(len(row[k]) for row in [head] + body) for k in range(len(head))]
    lines = ["  ".join(c.ljust(w) if k == 0 else c.rjust(w) for k, (c, w) in enumerate(zip(row, widths)))
             for row in [head] + body]
    notes = [f"# {r.method}: {r.error}" for r in rows if r.error]
    return "\n".join(lines + notes) + "\n"


__all__ = ["BenchConfig", "BenchRow", "CSV_HEADER", "accuracy_diagnostics", "rows_to_csv",
           "rows_to_text", "run_bench"]
