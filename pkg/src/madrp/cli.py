"""Command line interface: ``madrp {solve,bench,backtest,synth}``.

Options come from three layers: command line flags override a JSON file given
with ``--config``, which overrides built-in defaults. The default output
directory is taken from ``MADRP_OUTPUT_DIR`` (else the working directory).
Exit status: 0 success, 1 computation failure (error JSON on stderr), 2 usage.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import risk
from .backtest import (RollingConfig, metrics_table_csv, metrics_table_text, run_backtest,
                       wealth_csv)
from .bench import BenchConfig, rows_to_csv, rows_to_text, run_bench
from .errors import MadRPError
from .scenarios import (CsvLayout, load_csv, prices_from_returns, returns_from_prices,
                        synth_comonotone, synth_market, write_csv)
from .solvers import METHODS, solve

ENV_OUTPUT_DIR = "MADRP_OUTPUT_DIR"
STRATEGY_ALIASES = {"minv": "min_var", "minmad": "min_mad", "volrp": "vol_rp",
                    "madrp": "log_constr", "ew": "ew"}

# defaults per command; keys double as the allowed config-file keys
DEFAULTS = {
    "common": {"data": None, "out": None, "no_header": False, "no_date_column": False,
               "delimiter": ",", "no_timing": False},
    "solve": {"method": None, "tol": None, "n_from_data": False},
    "bench": {"methods": "all", "first_days": None, "repeats": 1, "parallel": False},
    "backtest": {"strategies": "minv,minmad,volrp,madrp,ew", "in_sample": 250,
                 "out_sample": 20, "rebalance": 20, "annualization": 250,
                 "risk_free": 0.0},
    "synth": {"kind": "random", "n": 5, "t": 500, "seed": 0, "file": None},
}


class UsageError(Exception):
    pass


def _parser():
    p = argparse.ArgumentParser(prog="madrp", description="MAD risk parity portfolios")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, data=True):
        sp.add_argument("--config", help="JSON file with option values")
        sp.add_argument("--out", help=f"output directory (default ${ENV_OUTPUT_DIR} or .)")
        sp.add_argument("--no-timing", action="store_const", const=True, default=None,
                        help="write 0 for wall times so repeated runs are byte-identical")
        if data:
            sp.add_argument("--data", help="price CSV (one column per asset)")
            sp.add_argument("--no-header", action="store_const", const=True, default=None)
            sp.add_argument("--no-date-column", action="store_const", const=True, default=None)
            sp.add_argument("--delimiter")

    s = sub.add_parser("solve", help="compute one portfolio")
    common(s)
    s.add_argument("--method", help=f"one of {', '.join(METHODS)}")
    s.add_argument("--tol", type=float)
    s.add_argument("--n-from-data", action="store_const", const=True, default=None,
                   help="accepted for ew: the asset count comes from the data")

    b = sub.add_parser("bench", help="accuracy/timing table over methods")
    common(b)
    b.add_argument("--methods", help="comma-separated names or 'all'")
    b.add_argument("--first-days", type=int)
    b.add_argument("--repeats", type=int)
    b.add_argument("--parallel", action="store_const", const=True, default=None)

    t = sub.add_parser("backtest", help="rolling-window out-of-sample evaluation")
    common(t)
    t.add_argument("--strategies", help="comma-separated: minv,minmad,volrp,madrp,ew or method names")
    t.add_argument("--in-sample", type=int)
    t.add_argument("--out-sample", type=int)
    t.add_argument("--rebalance", type=int)
    t.add_argument("--annualization", type=int)
    t.add_argument("--risk-free", type=float)

    y = sub.add_parser("synth", help="write a synthetic price CSV")
    common(y, data=False)
    y.add_argument("--kind", choices=("comonotone", "random"))
    y.add_argument("--n", type=int)
    y.add_argument("--t", type=int, help="number of returns (the file has t + 1 price rows)")
    y.add_argument("--seed", type=int)
    y.add_argument("--file", help="output file (default: <out>/synth_<kind>_n<n>_t<t>_seed<seed>.csv)")
    return p


def _resolve(args):
    """Merge flags over config over defaults into a plain dict."""
    cmd = args.command
    allowed = {**DEFAULTS["common"], **DEFAULTS[cmd]}
    if cmd == "synth":
        for k in ("data", "no_header", "no_date_column", "delimiter"):
            allowed.pop(k)
    opts = dict(allowed)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(cfg) - set(allowed))
        if unknown:
            raise UsageError(f"unknown config keys for '{cmd}': {', '.join(unknown)}")
        opts.update(cfg)
    for k in allowed:
        v = getattr(args, k, None)
        if v is not None:
            opts[k] = v
    return opts


def _outdir(opts):
    out = Path(opts["out"] or os.environ.get(ENV_OUTPUT_DIR) or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _layout(opts):
    return CsvLayout(header=not opts["no_header"], date_column=not opts["no_date_column"],
                     delimiter=opts["delimiter"])


def _load(opts):
    if not opts["data"]:
        raise UsageError("--data is required")
    return load_csv(opts["data"], _layout(opts))


def _write(path, text):
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_solve(opts):
    method = opts["method"]
    if method not in METHODS:
        raise UsageError(f"--method must be one of {', '.join(METHODS)} (got {method!r})")
    prices = _load(opts)
    scn = returns_from_prices(prices)
    kw = {} if opts["tol"] is None else {"tol": float(opts["tol"])}
    if method in ("ew", "closed_form") and kw:
        raise UsageError(f"--tol does not apply to {method}")
    rep = solve(scn, method, **kw)
    timing = not opts["no_timing"]
    out = _outdir(opts)
    lines = ["asset_id,weight"] + [f"{a},{float(w)!r}" for a, w in zip(scn.asset_ids, rep.x)]
    _write(out / f"solve_{method}_weights.csv", "\n".join(lines) + "\n")
    doc = rep.to_dict(timing=timing)
    doc["asset_ids"] = [str(a) for a in scn.asset_ids]
    _write(out / f"solve_{method}.json", _dump(doc))
    from .bench import BenchRow
    row = BenchRow(method, rep.f_value, rep.mad_value, rep.mean_abs_dev, rep.max_abs_dev,
                   1.0 / scn.n, rep.wall_time)
    sys.stdout.write(rows_to_text([row], timing=timing))
    return 0


def _method_list(text):
    if text is None or not str(text).strip():
        raise UsageError("empty method list")
    if str(text).strip() == "all":
        return list(METHODS)
    names = [m.strip() for m in str(text).split(",") if m.strip()]
    if not names:
        raise UsageError("empty method list")
    bad = [m for m in names if m not in METHODS]
    if bad:
        raise UsageError(f"unknown methods {', '.join(bad)}; expected names from {', '.join(METHODS)}")
    return names


def cmd_bench(opts):
    methods = _method_list(opts["methods"])
    if opts["repeats"] is None or int(opts["repeats"]) < 1:
        raise UsageError("--repeats must be at least 1")
    fd = opts["first_days"]
    if fd is not None and int(fd) < 2:
        raise UsageError("--first-days must be at least 2")
    scn = returns_from_prices(_load(opts))
    cfg = BenchConfig(first_days=None if fd is None else int(fd), repeats=int(opts["repeats"]),
                      parallel=bool(opts["parallel"]))
    rows = run_bench(scn, methods, cfg)
    timing = not opts["no_timing"]
    out = _outdir(opts)
    _write(out / "bench.csv", rows_to_csv(rows, timing))
    text = rows_to_text(rows, timing)
    _write(out / "bench.txt", text)
    sys.stdout.write(text)
    return 0


def _strategy_list(text):
    names = [s.strip() for s in str(text or "").split(",") if s.strip()]
    if not names:
        raise UsageError("empty strategy list")
    out = []
    for s in names:
        m = STRATEGY_ALIASES.get(s, s)
        if m not in METHODS:
            raise UsageError(f"unknown strategy {s!r}; use {', '.join(STRATEGY_ALIASES)} or a method name")
        out.append((s, m))
    if len({s for s, _ in out}) != len(out):
        raise UsageError("duplicate strategy")
    return out


def cmd_backtest(opts):
    strategies = _strategy_list(opts["strategies"])
    try:
        cfg = RollingConfig(int(opts["in_sample"]), int(opts["out_sample"]),
                            int(opts["rebalance"]), int(opts["annualization"]),
                            float(opts["risk_free"]))
    except ValueError as exc:
        raise UsageError(str(exc))
    prices = _load(opts)
    results = {}
    for label, method in strategies:
        results[label] = run_backtest(prices, method, cfg)
    out = _outdir(opts)
    for label, res in results.items():
        _write(out / f"backtest_{label}.json", res.to_json())
    _write(out / "backtest_metrics.csv", metrics_table_csv(results))
    text = metrics_table_text(results)
    _write(out / "backtest_metrics.txt", text)
    _write(out / "backtest_wealth.csv", wealth_csv(results))
    sys.stdout.write(text)
    return 0


def _synthetic_dates(count, start=_dt.date(2000, 1, 3)):
    """Consecutive weekdays as ISO labels."""
    days, d = [], start
    while len(days) < count:
        if d.weekday() < 5:
            days.append(d.isoformat())
        d += _dt.timedelta(days=1)
    return tuple(days)


def cmd_synth(opts):
    kind, n, T, seed = opts["kind"], int(opts["n"]), int(opts["t"]), int(opts["seed"])
    if kind not in ("comonotone", "random"):
        raise UsageError("--kind must be comonotone or random")
    if n < 1 or T < 2:
        raise UsageError("need --n >= 1 and --t >= 2")
    dates = _synthetic_dates(T + 1)
    ids = tuple(f"A{i + 1}" for i in range(n))
    if kind == "random":
        prices = prices_from_returns(synth_market(n, T, seed).returns, ids, 100.0, dates)
    else:
        if n < 2:
            raise UsageError("comonotone data needs --n >= 2")
        rng = np.random.default_rng(seed)
        for _ in range(100):
            scn = synth_comonotone(n, T, seed=int(rng.integers(2 ** 31)))
            prices = prices_from_returns(scn.returns, ids, 100.0, dates)
            # the file must stay additive after prices are turned back into returns
            if risk.is_additive(returns_from_prices(prices)):
                break
        else:
            raise MadRPError("could not produce an additive price file")
    path = Path(opts["file"]) if opts["file"] else (
        _outdir(opts) / f"synth_{kind}_n{n}_t{T}_seed{seed}.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    write_csv(prices, path)
    sys.stdout.write(f"{path}\n")
    return 0


COMMANDS = {"solve": cmd_solve, "bench": cmd_bench, "backtest": cmd_backtest,
            "synth": cmd_synth}


def main(argv=None):
    parser = _parser()
    args = parser.parse_args(argv)  # exits with status 2 on bad flags
    try:
        opts = _resolve(args)
        return COMMANDS[args.command](opts)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"madrp {args.command}: error: {exc}\n")
        return 2
    except (MadRPError, ValueError, OSError, ArithmeticError, np.linalg.LinAlgError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
