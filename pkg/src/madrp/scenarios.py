"""Discrete return scenarios: prices, returns, CSV ingestion and synthetic markets.

Each of the ``T`` historical return rows is one equally likely scenario.
"""
from __future__ import annotations

import csv
import datetime as _dt
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import DataError, DimensionError


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def _column_means(r):
    mu = np.array([math.fsum(col) / len(col) for col in r.T])
    const = np.all(r == r[0], axis=0)
    mu[const] = r[0, const]
    return mu


@dataclass(frozen=True)
class PriceSeries:
    asset_ids: tuple
    prices: np.ndarray
    dates: Optional[tuple] = None

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=np.float64)
        if prices.ndim != 2:
            raise DataError("prices must be a 2-D (days x assets) matrix")
        if prices.shape[0] < 2:
            raise DataError(f"need at least 2 price rows, got {prices.shape[0]}")
        if len(self.asset_ids) != prices.shape[1]:
            raise DimensionError(
                f"{len(self.asset_ids)} asset ids for {prices.shape[1]} price columns"
            )
        if len(set(self.asset_ids)) != len(self.asset_ids):
            raise DataError("duplicate asset id")
        bad = np.argwhere(~(prices > 0.0))
        if bad.size:
            r, c = (int(v) for v in bad[0])
            raise DataError(
                f"non-positive or missing price {prices[r, c]!r} at row {r}, column {c}",
                cell=(r, c),
            )
        if self.dates is not None and len(self.dates) != prices.shape[0]:
            raise DimensionError("dates must have one label per price row")
        object.__setattr__(self, "asset_ids", tuple(self.asset_ids))
        object.__setattr__(self, "prices", _frozen(prices))
        if self.dates is not None:
            object.__setattr__(self, "dates", tuple(self.dates))

    @property
    def n(self):
        return self.prices.shape[1]

    def __len__(self):
        return self.prices.shape[0]

    def head(self, rows):
        """First ``rows`` price rows (``rows - 1`` return days)."""
        dates = None if self.dates is None else self.dates[:rows]
        return PriceSeries(self.asset_ids, self.prices[:rows], dates)

    def select(self, columns):
        cols = list(columns)
        return PriceSeries(
            tuple(self.asset_ids[c] for c in cols), self.prices[:, cols], self.dates
        )


@dataclass(frozen=True)
class ScenarioMatrix:
    """``T x n`` linear returns with their column means (population convention)."""

    returns: np.ndarray
    means: np.ndarray = field(default=None)
    asset_ids: Optional[tuple] = None

    def __post_init__(self):
        r = np.asarray(self.returns, dtype=np.float64)
        if r.ndim == 1:
            r = r[:, None]
        if r.ndim != 2:
            raise DimensionError("returns must be a 2-D (scenarios x assets) matrix")
        T, n = r.shape
        if T < 2 or n < 1:
            raise DimensionError(f"need T >= 2 and n >= 1, got T={T}, n={n}")
        if not np.all(np.isfinite(r)):
            raise DataError("returns contain non-finite values")
        mu = _column_means(r) if self.means is None else np.asarray(self.means, float)
        if mu.shape != (n,):
            raise DimensionError("means must be an n-vector")
        if not np.allclose(mu, _column_means(r), rtol=0.0, atol=1e-12):
            raise DataError("means do not match the column averages of returns")
        object.__setattr__(self, "returns", _frozen(r))
        object.__setattr__(self, "means", _frozen(mu))
        if self.asset_ids is None:
            object.__setattr__(self, "asset_ids", tuple(f"A{i + 1}" for i in range(n)))
        elif len(self.asset_ids) != n:
            raise DimensionError("asset_ids length does not match returns")
        else:
            object.__setattr__(self, "asset_ids", tuple(self.asset_ids))

    @property
    def T(self):
        return self.returns.shape[0]

    @property
    def n(self):
        return self.returns.shape[1]

    @property
    def probability(self):
        return 1.0 / self.T

    @cached_property
    def deviations(self):
        """Centred returns ``r_t - mu`` (C-contiguous, read-only)."""
        D = np.ascontiguousarray(self.returns - self.means)
        D.setflags(write=False)
        return D

    @cached_property
    def asset_mads(self):
        return np.abs(self.deviations).mean(axis=0)

    @cached_property
    def covariance(self):
        D = self.deviations
        return (D.T @ D) / self.T

    @property
    def constant_assets(self):
        """Indices of assets whose returns never deviate from their mean."""
        return [int(i) for i in np.flatnonzero(np.all(self.deviations == 0.0, axis=0))]

    @property
    def is_degenerate(self):
        return bool(self.constant_assets)

    def window(self, start, stop):
        return ScenarioMatrix(self.returns[start:stop], asset_ids=self.asset_ids)

    def scaled(self, k):
        return ScenarioMatrix(self.returns * k, asset_ids=self.asset_ids)


@dataclass(frozen=True)
class DatasetDescriptor:
    name: str
    n_assets: int
    n_days: int
    period: str = ""

    def check(self, prices: PriceSeries):
        if prices.n != self.n_assets or len(prices) != self.n_days:
            raise DimensionError(
                f"{self.name}: expected {self.n_assets} assets x {self.n_days} days, "
                f"got {prices.n} x {len(prices)}"
            )


# Published universe sizes (days are price observations).
KNOWN_DATASETS = {
    d.name: d
    for d in (
        DatasetDescriptor("DJIA2005", 21, 1564, "1/2013-12/2018"),
        DatasetDescriptor("ETF-EC", 24, 1042, "1/2015-12/2018"),
        DatasetDescriptor("EuroBonds", 62, 1564, "1/2013-12/2018"),
        DatasetDescriptor("CIB-mix", 11, 1564, "1/2013-12/2018"),
        DatasetDescriptor("WorldBonds", 104, 1564, "1/2013-12/2018"),
    )
}


def describe(prices: PriceSeries, name="dataset"):
    period = ""
    if prices.dates:
        period = f"{prices.dates[0]}/{prices.dates[-1]}"
    return DatasetDescriptor(name, prices.n, len(prices), period)


def returns_from_prices(prices: PriceSeries) -> ScenarioMatrix:
    """Linear returns ``(p_t - p_{t-1}) / p_{t-1}``."""
    if not isinstance(prices, PriceSeries):
        prices = PriceSeries(
            tuple(f"A{i + 1}" for i in range(np.shape(prices)[1])), prices
        )
    p = prices.prices
    r = (p[1:] - p[:-1]) / p[:-1]
    return ScenarioMatrix(r, asset_ids=prices.asset_ids)


def prices_from_returns(returns, asset_ids=None, start=1.0, dates=None):
    """Compound returns into a price path starting at ``start``."""
    r = np.asarray(returns, dtype=np.float64)
    if np.any(r <= -1.0):
        raise DataError("returns <= -100% cannot be compounded into positive prices")
    p = start * np.vstack([np.ones(r.shape[1]), np.cumprod(1.0 + r, axis=0)])
    ids = asset_ids or tuple(f"A{i + 1}" for i in range(r.shape[1]))
    return PriceSeries(tuple(ids), p, dates)


# ---------------------------------------------------------------- CSV I/O


@dataclass(frozen=True)
class CsvLayout:
    header: bool = True
    date_column: bool = True
    delimiter: str = ","


def load_csv(path, layout: CsvLayout = CsvLayout()) -> PriceSeries:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh, delimiter=layout.delimiter) if row]
    if layout.header:
        if not rows:
            raise DataError(f"{path}: empty file")
        head, rows = rows[0], rows[1:]
        ids = [h.strip() for h in (head[1:] if layout.date_column else head)]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise DataError(f"{path}: duplicate asset id {dup!r}")
    else:
        ids = None
    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 data rows, got {len(rows)}")

    first = 1 if layout.date_column else 0
    width = len(rows[0]) - first
    if ids is None:
        ids = [f"A{i + 1}" for i in range(width)]
    if width != len(ids) or width < 1:
        raise DataError(f"{path}: header has {len(ids)} assets but row 1 has {width}")

    values = np.empty((len(rows), width))
    dates = [] if layout.date_column else None
    for r, row in enumerate(rows):
        if len(row) - first != width:
            raise DataError(f"{path}: row {r + 1} has {len(row) - first} values, expected {width}")
        if dates is not None:
            label = row[0].strip()
            try:
                _dt.date.fromisoformat(label[:10])
            except ValueError:
                raise DataError(f"{path}: row {r + 1}: bad ISO-8601 date {label!r}", cell=(r, 0))
            dates.append(label)
        for c, cell in enumerate(row[first:]):
            text = cell.strip()
            try:
                v = float(text)
            except ValueError:
                raise DataError(
                    f"{path}: row {r + 1}, column {c + first}: cannot parse {cell!r}",
                    cell=(r, c + first),
                ) from None
            if not math.isfinite(v):
                raise DataError(f"{path}: row {r + 1}, column {c + first}: {cell!r}", cell=(r, c + first))
            values[r, c] = v
    try:
        return PriceSeries(tuple(ids), values, None if dates is None else tuple(dates))
    except DataError as exc:
        if exc.cell is not None:
            r, c = exc.cell
            raise DataError(
                f"{path}: row {r + 1}, column {c + first}: {exc}", cell=(r, c + first)
            ) from None
        raise


def write_csv(prices: PriceSeries, path, layout: CsvLayout = CsvLayout()):
    """Write prices with shortest round-trip float formatting."""
    use_dates = layout.date_column and prices.dates is not None
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=layout.delimiter, lineterminator="\n")
        if layout.header:
            w.writerow((["date"] if use_dates else []) + list(prices.asset_ids))
        for r in range(len(prices)):
            row = [repr(float(v)) for v in prices.prices[r]]
            w.writerow(([prices.dates[r]] if use_dates else []) + row)


# ---------------------------------------------------------- synthetic data


def synth_comonotone(n, T, scales=None, seed=0, z=None, intercepts=None,
                     vol=0.01, max_draws=100) -> ScenarioMatrix:
    """Returns ``r_i = scales[i] * Z + b_i`` driven by one common factor ``Z``.

    Deviations from the means then share their sign in every scenario, so
    portfolio MAD is additive over long-only weights. Pass ``z`` to fix the
    factor path (a constant ``z`` gives a degenerate, zero-MAD market).
    """
    if n < 2:
        raise DimensionError("comonotone generator needs n >= 2 (the condition is pairwise)")
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.5, 2.0, n) if scales is None else np.asarray(scales, float)
    if a.shape != (n,) or np.any(a <= 0):
        raise DataError("scales must be n positive numbers")
    b = np.full(n, 3e-4) if intercepts is None else np.asarray(intercepts, float)
    fixed = z is not None
    for _ in range(max_draws):
        zz = np.asarray(z, dtype=np.float64) if fixed else rng.standard_normal(T) * vol
        if zz.shape != (T,):
            raise DimensionError("z must have T entries")
        sm = ScenarioMatrix(zz[:, None] * a[None, :] + b[None, :])
        # rounding can flip a sign only when Z_t sits within ulps of its mean
        if fixed or kernels.worst_pair_product(sm.deviations)[0] >= 0.0:
            return sm
    raise DataError("could not draw a sign-consistent comonotone sample")


def synth_market(n, T, seed=0, n_factors=2, vol=0.01, drift=3e-4) -> ScenarioMatrix:
    """Generic factor-model market: heterogeneous loadings plus idiosyncratic noise."""
    rng = np.random.default_rng(seed)
    beta = rng.uniform(-0.5, 1.5, (n, n_factors))
    f = rng.standard_normal((T, n_factors)) * vol
    idio = rng.uniform(0.5, 2.0, n) * vol
    r = drift * rng.uniform(0.0, 2.0, n) + f @ beta.T + rng.standard_normal((T, n)) * idio
    return ScenarioMatrix(np.clip(r, -0.5, 0.5))


def random_scenarios(n, T, seed=0, scale=0.02):
    """Plain i.i.d. Gaussian scenarios with heterogeneous volatilities (test fixtures)."""
    rng = np.random.default_rng(seed)
    vols = rng.uniform(0.5, 2.0, n) * scale
    return ScenarioMatrix(rng.standard_normal((T, n)) * vols)
