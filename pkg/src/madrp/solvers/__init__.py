"""Portfolio construction strategies, each returning a :class:`SolverReport`."""
from __future__ import annotations

from functools import partial

from .baselines import (check_nondegenerate, solve_closed_form, solve_ew, solve_min_mad,
                        solve_min_var, solve_vol_rp)
from .leastsq import solve_ls_abs, solve_ls_rel
from .logform import solve_log_constr, solve_log_obj
from .refine import refine_rp
from .report import METHODS, RP_METHODS, SolverReport, diagnostics, make_report
from .soe import SignPattern, adversarial_tie_instance, solve_soe

SOLVERS = {
    "log_obj": solve_log_obj,
    "log_constr": solve_log_constr,
    "ls_rel": solve_ls_rel,
    "ls_abs": solve_ls_abs,
    "soe_1": partial(solve_soe, variant="soe_1"),
    "soe_2": partial(solve_soe, variant="soe_2"),
    "closed_form": solve_closed_form,
    "vol_rp": solve_vol_rp,
    "min_mad": solve_min_mad,
    "min_var": solve_min_var,
    "ew": solve_ew,
}


def solve(scn, method, **options) -> SolverReport:
    """Run ``method`` (a name from :data:`METHODS`) on ``scn``."""
    try:
        fn = SOLVERS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}") from None
    return fn(scn, **options)


__all__ = [
    "METHODS", "RP_METHODS", "SOLVERS", "SignPattern", "SolverReport",
    "adversarial_tie_instance", "check_nondegenerate", "diagnostics", "make_report",
    "refine_rp", "solve", "solve_closed_form", "solve_ew", "solve_log_constr",
    "solve_log_obj", "solve_ls_abs", "solve_ls_rel", "solve_min_mad", "solve_min_var",
    "solve_soe", "solve_vol_rp",
]
