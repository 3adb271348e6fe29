"""Exit criteria, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line with its measured figures
(visible under ``pytest -v`` or ``-s``) before asserting. Run only these with
``pytest -m acceptance``.
"""
import json
import math
import os
import time

import numpy as np
import pytest

from madrp import risk
from madrp.backtest import RollingConfig, run_backtest
from madrp.backtest import metrics as M
from madrp.bench import run_bench, BenchConfig
from madrp.cli import main as cli_main
from madrp.errors import DegenerateMarketError, SolverError
from madrp.scenarios import (ScenarioMatrix, load_csv, random_scenarios, returns_from_prices,
                             synth_comonotone, synth_market)
from madrp.solvers import check_nondegenerate, solve, solve_min_mad

pytestmark = pytest.mark.acceptance

RP_FORMULATIONS = ("log_obj", "log_constr", "ls_rel", "ls_abs", "soe_1", "soe_2")
DJIA_ENV = "MADRP_DJIA2005"


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail, status=None):
        with capsys.disabled():
            print(f"\n[{status or ('PASS' if ok else 'FAIL')}] criterion {number:>2}: {detail}")
        return ok
    return emit


def _instances(count, seed, n_max, T_max, T_min=2):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(1, n_max + 1))
        T = int(rng.integers(T_min, T_max + 1))
        yield random_scenarios(n, T, seed=int(rng.integers(2 ** 31))), rng


# ------------------------------------------------------------------ 1


def test_mad_identities(report):
    t0 = time.perf_counter()
    bad = {"mad=2msad": 0, "homogeneity": 0, "subadditivity": 0, "lower range": 0}
    for scn, rng in _instances(200, 101, 8, 100):
        x = rng.dirichlet(np.ones(scn.n))
        y = rng.uniform(0, 2, scn.n)
        m = risk.mad(scn, x)
        bad["mad=2msad"] += m != 2.0 * risk.msad(scn, x)
        for lam in (0.0, 1e-3, 0.37, 2.0, 1e3):
            bad["homogeneity"] += abs(risk.mad(scn, lam * x) - lam * m) > 1e-12 * lam * m
        bad["subadditivity"] += risk.mad(scn, x + y) > m + risk.mad(scn, y) + 1e-12
        R = scn.returns @ x
        bad["lower range"] += bool(m > R.mean() - R.min() + 1e-12)
    dt = time.perf_counter() - t0
    ok = report(1, sum(bad.values()) == 0 and dt < 5,
                f"MAD identities on 200 instances, violations {bad}, {dt:.2f}s (< 5s)")
    assert ok


# ------------------------------------------------------------------ 2


def test_euler_decomposition(report):
    t0 = time.perf_counter()
    worst, points = 0.0, 0
    for scn, rng in _instances(2000, 202, 8, 100):
        x = rng.dirichlet(np.ones(scn.n))
        rc = risk.risk_contributions(scn, x)
        if rc.selection.tie_scenarios:
            continue
        worst = max(worst, abs(float(np.sum(rc.rc)) - risk.mad(scn, x)))
        points += 1
        if points == 1000:
            break
    dt = time.perf_counter() - t0
    ok = report(2, points == 1000 and worst <= 1e-10 and dt < 5,
                f"Euler sum at {points} no-tie points, max |sum RC - MAD| = {worst:.2e} "
                f"(<= 1e-10), {dt:.2f}s (< 5s)")
    assert ok


# ------------------------------------------------------------------ 3


def test_gradient_finite_differences(report):
    h = 1e-7
    t0 = time.perf_counter()
    worst, points = 0.0, 0
    for scn, rng in _instances(1000, 303, 8, 100, T_min=3):
        x = rng.dirichlet(np.ones(scn.n))
        D = scn.deviations
        d = D @ x
        # no tie anywhere in the stencil: a step of h in one weight cannot flip a sign
        if np.min(np.abs(d)) <= 2 * h * np.max(np.abs(D)):
            continue
        g, sel = risk.mad_subgradient(scn, x)
        fd = np.empty(scn.n)
        for i in range(scn.n):
            e = np.zeros(scn.n)
            e[i] = h
            fd[i] = (risk.mad(scn, x + e) - risk.mad(scn, x - e)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(g - fd))))
        points += 1
        if points == 100:
            break
    dt = time.perf_counter() - t0
    ok = report(3, points == 100 and worst <= 1e-5 and dt < 10,
                f"subgradient vs central differences at {points} points, max error "
                f"{worst:.2e} (<= 1e-5), {dt:.2f}s (< 10s)")
    assert ok


# ------------------------------------------------------------------ 4


def test_additivity_and_closed_form(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    add_err, cf_err, failures = 0.0, 0.0, []
    for k in range(50):
        n = int(rng.integers(2, 7))
        T = int(rng.integers(4, 17))
        scn = synth_comonotone(n, T, seed=int(rng.integers(2 ** 31)))
        for _ in range(5):
            x = rng.uniform(0, 3, n)
            add_err = max(add_err, abs(risk.mad(scn, x) - float(x @ scn.asset_mads)))
        ref = risk.closed_form_rp(scn).x
        for method in RP_FORMULATIONS:
            try:
                cf_err = max(cf_err, float(np.max(np.abs(solve(scn, method).x - ref))))
            except (SolverError, ValueError) as exc:
                failures.append((k, method, str(exc)[:60]))
    dt = time.perf_counter() - t0
    ok = report(4, add_err <= 1e-12 and cf_err <= 1e-4 and not failures and dt < 60,
                f"50 comonotone instances: additivity error {add_err:.1e} (<= 1e-12), "
                f"max |x - closed form| over {len(RP_FORMULATIONS)} formulations "
                f"{cf_err:.1e} (<= 1e-4), failures {len(failures)}, {dt:.1f}s (< 60s)")
    assert ok, failures[:3]


# ------------------------------------------------------------------ 5


def _fractional_tie(scn, x):
    """True when the balanced subgradient needs a tie entry strictly inside (-1, 1), off 0."""
    sel = risk.risk_contributions(scn, x, tie_rule="balanced").selection
    vals = np.abs(sel.s[list(sel.tie_scenarios)])
    return bool(np.any((vals > 1e-6) & (vals < 1 - 1e-6)))


def test_cross_formulation_agreement(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(505)
    spread, worst_dev, drawn = 0.0, 0.0, 0
    soe_feasible = soe_corner = 0
    unexplained = []
    kept = 0
    while kept < 30:
        n = int(rng.integers(2, 6))
        T = int(rng.integers(n + 2, 31))
        scn = random_scenarios(n, T, seed=int(rng.integers(2 ** 31)))
        drawn += 1
        try:
            check_nondegenerate(scn)
        except DegenerateMarketError:
            continue
        kept += 1
        sols = {}
        for method in ("log_obj", "log_constr", "ls_rel", "ls_abs"):
            rep = solve(scn, method)
            sols[method] = rep.x
            worst_dev = max(worst_dev, rep.max_abs_dev)
        for variant in ("soe_1", "soe_2"):
            try:
                rep = solve(scn, variant)
            except SolverError:
                # the sign system can be infeasible although the RP portfolio exists;
                # accept only that documented corner case, then check the fallback
                if not _fractional_tie(scn, sols["log_constr"]):
                    unexplained.append((drawn, variant))
                soe_corner += variant == "soe_1"
                rep = solve(scn, variant, fallback=True)
            else:
                soe_feasible += variant == "soe_1"
            sols[variant] = rep.x
            worst_dev = max(worst_dev, rep.max_abs_dev)
        X = np.array(list(sols.values()))
        spread = max(spread, float(np.max(X.max(axis=0) - X.min(axis=0))))
    dt = time.perf_counter() - t0
    ok = report(5, spread <= 1e-3 and worst_dev <= 1e-3 and not unexplained and dt < 300,
                f"30 non-degenerate instances ({drawn} drawn): max pairwise weight gap "
                f"{spread:.1e} (<= 1e-3), max MaxAbsDev {worst_dev:.1e} (<= 1e-3); sign system "
                f"solved on {soe_feasible}, infeasible-with-fractional-tie on {soe_corner} "
                f"(fallback compared), unexplained {len(unexplained)}, {dt:.1f}s (< 300s)")
    assert ok, unexplained


# ------------------------------------------------------------------ 6


def test_ordering_chain(report):
    t0 = time.perf_counter()
    violations, count = [], 0
    rng = np.random.default_rng(606)
    cases = [random_scenarios(int(rng.integers(2, 9)), int(rng.integers(10, 120)),
                              seed=int(rng.integers(2 ** 31))) for _ in range(40)]
    cases += [synth_comonotone(int(rng.integers(2, 7)), 30, seed=k) for k in range(10)]
    cases += [synth_market(10, 250, seed=k) for k in range(5)]
    for scn in cases:
        lo = solve_min_mad(scn).mad_value
        ew = risk.mad(scn, np.full(scn.n, 1.0 / scn.n))
        for method in ("log_obj", "log_constr", "ls_rel", "ls_abs"):
            rp = solve(scn, method).mad_value
            count += 1
            if not (lo <= rp + 1e-8 and rp <= ew + 1e-8):
                violations.append((method, lo, rp, ew))
    dt = time.perf_counter() - t0
    ok = report(6, not violations and dt < 60,
                f"minMAD <= MAD-RP <= EW + 1e-8 on {count} (instance, method) pairs, "
                f"violations {len(violations)}, {dt:.1f}s (< 60s)")
    assert ok, violations[:3]


# ------------------------------------------------------------------ 7


def _grid_min_mad(scn, step=1e-3, chunk=20000):
    k = int(round(1 / step))
    a, b = np.meshgrid(np.arange(k + 1), np.arange(k + 1), indexing="ij")
    keep = a + b <= k
    W = np.column_stack([a[keep], b[keep], k - a[keep] - b[keep]]) / k
    Dt = scn.deviations.T
    best = np.inf
    for i in range(0, W.shape[0], chunk):
        best = min(best, float(np.abs(W[i:i + chunk] @ Dt).mean(axis=1).min()))
    return best


def test_min_mad_grid_oracle(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(707)
    gaps = []
    for _ in range(10):
        scn = random_scenarios(3, int(rng.integers(5, 60)), seed=int(rng.integers(2 ** 31)))
        lp = solve_min_mad(scn).mad_value
        grid = _grid_min_mad(scn)
        gaps.append((grid - lp, lp <= grid + 1e-12))
    dt = time.perf_counter() - t0
    worst = max(abs(g) for g, _ in gaps)
    below = all(b for _, b in gaps)
    ok = report(7, worst <= 1e-3 and below and dt < 120,
                f"LP vs 1e-3 simplex grid on 10 instances, max |grid - LP| {worst:.1e} "
                f"(<= 1e-3), LP never above grid: {below}, {dt:.1f}s (< 120s)")
    assert ok


# ------------------------------------------------------------------ 8


def test_backtest_metric_fixtures(report):
    t0 = time.perf_counter()
    checks = {}
    checks["mdd"] = abs(M.max_drawdown([1, 1.1, 0.99, 1.21]) - (-0.1))
    path = [1.0, 0.9, 1.2, 0.96, 1.3]
    dd = [0.0, -0.1, 0.0, -0.2, 0.0]
    checks["ulcer"] = abs(M.ulcer_index(path) - math.sqrt((0.01 + 0.04) / 4))
    r = np.array([1.0, -1.0]) * (0.2 / math.sqrt(250)) + 0.1 / 250
    checks["sharpe"] = abs(M.sharpe(r) - 0.5)
    s = np.array([0.02, -0.01, 0.005, -0.002])
    tdd = math.sqrt((1e-4 + 4e-6) / 4) * math.sqrt(250)
    checks["sortino"] = abs(M.sortino(s) - s.mean() * 250 / tdd)
    checks["turnover"] = abs(M.turnover([[0.5, 0.5], [0.6, 0.4]]) - 0.2)
    sym = np.array([0.03, -0.03, 0.01, -0.01, 0.02, -0.02, 0.0, 0.004, -0.004, 0.05] * 2 + [-0.05] * 2)
    checks["rachev"] = max(abs(M.rachev(sym, a) - 1.0) for a in (0.05, 0.10))
    assert np.allclose(M.drawdowns(path), dd)
    # wealth recursion on a set of backtests
    rec = 0.0
    cfg = RollingConfig(in_sample_days=120, out_sample_days=30, rebalance_days=30)
    for k, strat in enumerate(("ew", "min_var", "min_mad", "vol_rp", "log_constr", "ls_rel")):
        res = run_backtest(ScenarioMatrix(synth_market(4, 400, seed=k).returns), strat, cfg)
        w = res.wealth
        rec = max(rec, float(np.max(np.abs(w[1:] - w[:-1] * (1 + res.oos_returns)))), abs(w[0] - 1))
    dt = time.perf_counter() - t0
    worst = max(checks.values())
    ok = report(8, worst <= 1e-12 and rec <= 1e-12 and dt < 5,
                f"metric fixtures max error {worst:.1e} (<= 1e-12) over {sorted(checks)}, "
                f"wealth recursion error {rec:.1e} on 6 backtests, {dt:.2f}s (< 5s)")
    assert ok, checks


# ------------------------------------------------------------------ 9


def test_protocol_fidelity(report):
    t0 = time.perf_counter()
    cfg = RollingConfig(in_sample_days=250, out_sample_days=20, rebalance_days=20)
    expected = (600 - 250) // 20 + 1  # 17 full holding periods and one boundary period
    counts, turnovers = [], []
    for T in (599, 600):  # 600 prices or 600 returns
        rets = ScenarioMatrix(synth_market(2, T, seed=9).returns)
        for strat in ("log_constr", "ew"):
            res = run_backtest(rets, strat, cfg)
            counts.append(res.Q + 1)
            covered = res.oos_returns.size == T - 250
            if strat == "ew":
                turnovers.append(res.metrics.turnover)
            counts.append(expected if covered else -1)
    dt = time.perf_counter() - t0
    ok = report(9, all(c == expected for c in counts) and all(t == 0 for t in turnovers) and dt < 10,
                f"2 assets, 600 days: rebalances {sorted(set(counts))} (expected {expected}), "
                f"EW turnover {turnovers}, {dt:.2f}s (< 10s)")
    assert ok


# ----------------------------------------------------------------- 10


def test_cli_determinism(report, tmp_path, capsys):
    data = tmp_path / "data.csv"
    small = tmp_path / "small.csv"
    cli_main(["synth", "--kind", "random", "--n", "4", "--t", "320", "--seed", "3", "--file", str(data)])
    cli_main(["synth", "--kind", "comonotone", "--n", "3", "--t", "20", "--seed", "5", "--file", str(small)])
    capsys.readouterr()
    commands = [
        ["synth", "--kind", "random", "--n", "4", "--t", "320", "--seed", "3"],
        ["synth", "--kind", "comonotone", "--n", "3", "--t", "100", "--seed", "7"],
        ["solve", "--method", "log_obj", "--data", str(data)],
        ["solve", "--method", "ls_abs", "--data", str(data)],
        ["solve", "--method", "soe_1", "--data", str(small)],
        ["solve", "--method", "vol_rp", "--data", str(data)],
        ["bench", "--methods", "all", "--first-days", "30", "--data", str(data)],
        ["backtest", "--in-sample", "250", "--data", str(data)],
    ]
    differing, codes = [], []
    for j, cmd in enumerate(commands):
        snaps = []
        for k in range(2):
            out = tmp_path / f"run{j}_{k}"
            codes.append(cli_main(cmd + ["--out", str(out), "--no-timing"]))
            cap = capsys.readouterr()
            files = {p.name: p.read_bytes() for p in sorted(out.iterdir())} if out.exists() else {}
            snaps.append((cap.out.replace(str(out), "<out>"), cap.err, files))
        if snaps[0] != snaps[1]:
            differing.append(" ".join(cmd[:3]))
    ok = report(10, not differing and set(codes) == {0},
                f"{len(commands)} CLI commands run twice with --no-timing: "
                f"{len(commands) - len(differing)} byte-identical, differing {differing}, "
                f"exit codes {sorted(set(codes))}")
    assert ok


# ----------------------------------------------------------------- 11


def test_djia2005_report(report, tmp_path):
    path = os.environ.get(DJIA_ENV)
    if not path:
        report(11, True, f"conditional: set {DJIA_ENV} to the DJIA2005 price CSV to run", status="SKIP")
        pytest.skip(f"{DJIA_ENV} not set")
    prices = load_csv(path)
    scn = returns_from_prices(prices)
    rows = {r.method: r for r in run_bench(scn, ["ls_rel", "ls_abs", "log_constr"],
                                           BenchConfig(first_days=250))}
    devs = {m: r.max_abs_dev for m, r in rows.items()}
    cfg = RollingConfig(in_sample_days=500)
    std, sharpe = {}, {}
    for strat in ("min_var", "min_mad", "vol_rp", "log_constr", "ls_rel", "ew"):
        res = run_backtest(prices, strat, cfg)
        std[strat] = res.metrics.std_annual
        sharpe[strat] = res.metrics.sharpe
    best_sharpe = max(sharpe, key=lambda k: -np.inf if sharpe[k] is None else sharpe[k])
    rp_between = all(min(std["min_var"], std["ew"]) <= std[m] <= max(std["min_var"], std["ew"])
                     for m in ("log_constr", "ls_rel"))
    (tmp_path / "djia_report.json").write_text(json.dumps(
        {"max_abs_dev": devs, "std": std, "sharpe": sharpe}, indent=2))
    ok = report(11, all(v <= 1e-3 for v in devs.values()),
                f"DJIA2005 first 250 days MaxAbsDev {devs} (<= 1e-3); backtest report: best "
                f"Sharpe {best_sharpe} (expected: min_var), RP sigma between minV and EW: {rp_between}")
    assert ok
