"""Kernel dispatch: the compiled extension when it is importable, else the
pure-Python reference. Set ``HARDGEN_PURE_PYTHON=1`` to force the fallback."""

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("HARDGEN_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass


def held_karp(mat, impl=None):
    return (impl or _impl).held_karp(np.ascontiguousarray(mat, dtype=np.float64))


def tsp_robust_bnb(costs, incumbent=float("inf"), time_limit=float("inf"), impl=None):
    """Robust TSP search over costs of shape (N, m, m); successors are tried by
    increasing total cost over scenarios."""
    C = np.ascontiguousarray(costs, dtype=np.float64)
    key = np.ascontiguousarray(C.sum(axis=0))
    return (impl or _impl).tsp_robust_bnb(C, key, float(incumbent), float(time_limit))
