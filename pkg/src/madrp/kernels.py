"""Backend selection for the scenario kernels.

The compiled module is used when it imports; set ``MADRP_KERNELS=numpy`` to
force the fallback (the benchmark and the backend-parity tests do this).
"""
import os

import numpy as np

from . import _pykernels

_ckernels = None
if os.environ.get("MADRP_KERNELS", "").lower() != "numpy":
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        _ckernels = None

_impl = _ckernels if _ckernels is not None else _pykernels
BACKEND = _impl.BACKEND

RULE_CODES = {"zero": 0, "plus": 1, "minus": 2}


def _vec(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def deviations(D, x):
    """Portfolio deviations ``D @ x`` for a centred scenario matrix ``D``."""
    return _impl.deviations(_vec(D), _vec(x))


def abs_sums(d):
    """Return ``(sum of positive parts, sum of negative parts)`` of ``d``."""
    return _impl.abs_sums(_vec(d))


def sign_select(d, tie_abs, rule="zero"):
    return _impl.sign_select(_vec(d), float(tie_abs), RULE_CODES[rule])


def signed_colmean(D, s):
    return _impl.signed_colmean(_vec(D), _vec(s))


def drawdowns(wealth):
    return _impl.drawdowns(_vec(wealth))


def worst_pair_product(D):
    return _impl.worst_pair_product(_vec(D))


def sign_consistent(d, s, tol_abs):
    return bool(_impl.sign_consistent(_vec(d), _vec(s), float(tol_abs)))


def use_backend(name):
    """Switch the active backend at runtime (``"cython"`` or ``"numpy"``)."""
    global _impl, BACKEND
    if name == "numpy":
        _impl = _pykernels
    elif name == "cython":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not available")
        _impl = _ckernels
    else:
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = _impl.BACKEND


def available_backends():
    return ["numpy"] + (["cython"] if _ckernels is not None else [])
