"""Scenarios that make the midpoint heuristic look bad (Selection only).

The midpoint solution x of the averaged scenario is pinned by LP duality: the
aggregated cost of x must equal the dual value of the selection LP. Products
t_i * lam_i and c^i_k * x_k are linearized, and the resulting mixed binary
program is solved by a small LP-based branch-and-bound.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import Instance, build_uncertainty
from .lp import EQ, LE, LpBuilder, solve_lp
from .mro import box_arrays
from .problems import selection_solve_nominal
from .robust import TimeLimitError, robust_solve_exact

INT_TOL = 1e-6
OPT_TOL = 1e-6


@dataclass
class MidModel:
    builder_model: object
    x: list
    lam: list
    t: list
    c: np.ndarray  # N x n column indices
    q: list
    r: np.ndarray
    alpha: int
    beta: list
    M: np.ndarray


def mid_model(instance: Instance, boxes) -> MidModel:
    n, N, p = instance.n, instance.N, instance.p
    lo, hi, sums = box_arrays(boxes)
    M = hi.sum(axis=1)
    B = LpBuilder("max")
    x = B.vars(n, 0.0, 1.0, name="x")
    lam = B.vars(N, 0.0, 1.0, name="lam")
    t = B.vars(N, name="t")
    c = np.array([[B.var(lo[i, k], hi[i, k], name=f"c[{i},{k}]") for k in range(n)]
                  for i in range(N)])
    q = B.vars(N, obj=1.0, name="q")
    r = np.array([[B.var(name=f"r[{i},{k}]") for k in range(n)] for i in range(N)])
    alpha = B.var(name="alpha")
    beta = B.vars(n, name="beta")
    for i in range(N):
        B.row([(q[i], 1.0), (t[i], -1.0)], LE, 0.0)
        B.row([(q[i], 1.0), (lam[i], -M[i])], LE, 0.0)
        B.row([(t[i], 1.0)] + [(r[i, k], -1.0) for k in range(n)], EQ, 0.0)
    B.row([(v, 1.0) for v in lam], EQ, 1.0)
    # aggregated cost of x equals the dual bound of the selection LP
    B.row([(v, 1.0) for v in r.ravel()] + [(alpha, -float(p))] + [(v, 1.0) for v in beta], EQ, 0.0)
    B.row([(v, 1.0) for v in x], EQ, float(p))
    for k in range(n):
        B.row([(alpha, 1.0), (beta[k], -1.0)] + [(c[i, k], -1.0) for i in range(N)], LE, 0.0)
    for i in range(N):
        for k in range(n):
            B.row([(r[i, k], 1.0), (c[i, k], -1.0)], LE, 0.0)
            B.row([(r[i, k], 1.0), (x[k], -hi[i, k])], LE, 0.0)
            # r >= c - hi (1 - x): without it r could undercut c x and x would
            # not be pinned to the midpoint optimum
            B.row([(r[i, k], -1.0), (c[i, k], 1.0), (x[k], hi[i, k])], LE, hi[i, k])
        B.row([(v, 1.0) for v in c[i]], EQ, sums[i])
    return MidModel(B.build(), x, lam, t, c, q, r, alpha, beta, M)


def mid_generate(instance: Instance, b: float, time_limit: float = float("inf"),
                 stats: dict | None = None) -> tuple[Instance, float, np.ndarray]:
    """Depth-first branch-and-bound over x, then lam.

    Branches on the most fractional binary (x before lam, lowest index on
    ties). The root incumbent is the midpoint solution of the seed costs.
    """
    if instance.kind != "selection":
        raise ValueError("the midpoint generator is only built for selection")
    start = time.perf_counter()
    boxes = build_uncertainty(instance, b)
    mm = mid_model(instance, boxes)
    base = mm.builder_model
    n = instance.n
    lo, hi, _ = box_arrays(boxes)

    seed = np.array(instance.costs)
    xs, _ = selection_solve_nominal(seed.mean(axis=0), instance.p)
    best_val = float((seed @ xs).max())
    best_c, best_x = seed, xs
    binaries = list(mm.x) + list(mm.lam)
    nodes = 0
    stack = [(base.lo.copy(), base.hi.copy())]
    while stack:
        if time.perf_counter() - start > time_limit:
            raise TimeLimitError("midpoint generation hit the time limit",
                                 incumbent=(instance.with_costs(best_c), best_val, best_x))
        lo_v, hi_v = stack.pop()
        nodes += 1
        base.lo, base.hi = lo_v, hi_v
        out = solve_lp(base)
        if not out.optimal or out.objective <= best_val + OPT_TOL:
            continue
        vals = out.x[binaries]
        frac = np.abs(vals - np.round(vals))
        xfrac = frac[:n]
        if xfrac.max() > INT_TOL:
            j = int(np.argmax(xfrac))
        elif frac[n:].max() > INT_TOL:
            j = n + int(np.argmax(frac[n:]))
        else:
            x = np.round(out.x[mm.x])
            c = np.clip(out.x[mm.c], lo, hi)
            v = float((c @ x).max())
            if v > best_val:
                best_val, best_c, best_x = v, c, x
            continue
        var = binaries[j]
        up = (lo_v.copy(), hi_v.copy())
        up[0][var] = 1.0
        down = (lo_v.copy(), hi_v.copy())
        down[1][var] = 0.0
        if vals[j] >= 0.5:
            stack += [down, up]
        else:
            stack += [up, down]
    base.lo, base.hi = mm.builder_model.lo, mm.builder_model.hi
    _, mid_val = selection_solve_nominal(best_c.mean(axis=0), instance.p)
    if abs(best_c.mean(axis=0) @ best_x - mid_val) > OPT_TOL * (1 + abs(mid_val)):
        raise AssertionError("output selection is not optimal for the midpoint scenario")
    if stats is not None:
        stats["nodes"] = nodes
        stats["wall_time"] = time.perf_counter() - start
    return instance.with_costs(best_c), float((best_c @ best_x).max()), best_x


def mid_quality_report(instance: Instance, b: float, time_limit: float = float("inf")) -> dict:
    """Robust optima and B&B node counts of the midpoint and exact MRO hardenings."""
    from .mro import mro_generate

    base = robust_solve_exact(instance, time_limit)
    mid_inst, mid_val, _ = mid_generate(instance, b, time_limit)
    mro_inst, _ = mro_generate(instance, b, "exact", "exact", time_limit)
    rec = {"original": {"value": base.value, "nodes": base.nodes}}
    for name, inst in (("mid", mid_inst), ("mro", mro_inst)):
        r = robust_solve_exact(inst, time_limit)
        rec[name] = {"value": r.value, "nodes": r.nodes,
                     "node_ratio": r.nodes / base.nodes if base.nodes else None}
    rec["mid_value"] = mid_val
    return rec
