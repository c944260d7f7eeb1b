"""Solvers for the inner problem min_x max_j c^j x.

The exact solvers report a deterministic node count, which the harness uses as
its machine-independent hardness measure.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import Instance
from .lp import EQ, LE, LpModel, solve_lp
from .problems import Selection, Tsp, problem_for

INT_TOL = 1e-9


class TimeLimitError(RuntimeError):
    """Raised when a solver runs out of time; carries the best solution found."""

    def __init__(self, message, incumbent=None):
        super().__init__(message)
        self.incumbent = incumbent


@dataclass
class RobustResult:
    x: np.ndarray
    value: float
    nodes: int
    lp_solves: int
    wall_time: float
    proven_optimal: bool


def robust_value(costs, x) -> float:
    return float(np.max(np.asarray(costs, dtype=np.float64) @ np.asarray(x, dtype=np.float64)))


def _epigraph_lp(costs, problem, lo, hi) -> LpModel:
    """min t s.t. t >= c^j x for all j, x in the LP relaxation of X, lo <= x <= hi."""
    N, n = costs.shape
    rows, rel, rhs = [], [], []
    for j in range(N):
        rows.append(np.append(costs[j], -1.0))
        rel.append(LE)
        rhs.append(0.0)
    if isinstance(problem, Selection):
        rows.append(np.append(np.ones(n), 0.0))
        rel.append(EQ)
        rhs.append(float(problem.p))
    else:
        m = problem.m
        for k in range(m):
            r = np.zeros(n + 1)
            r[[k * m + l for l in range(m) if l != k]] = 1.0
            rows.append(r)
            rel.append(EQ)
            rhs.append(1.0)
        for l in range(m):
            r = np.zeros(n + 1)
            r[[k * m + l for k in range(m) if k != l]] = 1.0
            rows.append(r)
            rel.append(EQ)
            rhs.append(1.0)
    c = np.zeros(n + 1)
    c[n] = 1.0
    return LpModel("min", c, np.array(rows), rel, np.array(rhs),
                   np.append(lo, -np.inf), np.append(hi, np.inf))


def _relaxation(instance: Instance, problem):
    lo = np.zeros(instance.n)
    hi = np.ones(instance.n)
    if isinstance(problem, Tsp):
        hi[problem.fixed_zero()] = 0.0
    return _epigraph_lp(instance.costs, problem, lo, hi)


def robust_solve_heuristic(instance: Instance) -> RobustResult:
    """LP relaxation of the epigraph model, rounded into X."""
    start = time.perf_counter()
    problem = problem_for(instance)
    out = solve_lp(_relaxation(instance, problem))
    x = problem.round(out.x[: instance.n])
    return RobustResult(x, robust_value(instance.costs, x), 0, 1,
                        time.perf_counter() - start, False)


def robust_lp_bound(instance: Instance) -> float:
    """Optimal value of the LP relaxation used by the heuristic."""
    problem = problem_for(instance)
    return solve_lp(_relaxation(instance, problem)).objective


def robust_solve_exact(instance: Instance, time_limit: float = float("inf")) -> RobustResult:
    if instance.kind == "selection":
        return _selection_bnb(instance, time_limit)
    return _tsp_bnb(instance, time_limit)


def _selection_bnb(instance: Instance, time_limit: float) -> RobustResult:
    """Depth-first LP-based branch-and-bound on item inclusion.

    Branches on the most fractional item (lowest index on ties), exploring the
    side nearer to the LP value first.
    """
    start = time.perf_counter()
    costs = instance.costs
    n = instance.n
    problem = Selection(n, instance.p)
    best_x, best_v = None, np.inf
    nodes = lp_solves = 0
    stack = [(np.zeros(n), np.ones(n))]
    while stack:
        if time.perf_counter() - start > time_limit:
            raise TimeLimitError("robust selection solve hit the time limit",
                                 incumbent=(best_x, best_v))
        lo, hi = stack.pop()
        nodes += 1
        if lo.sum() > problem.p or hi.sum() < problem.p:
            continue
        out = solve_lp(_epigraph_lp(costs, problem, lo, hi))
        lp_solves += 1
        if not out.optimal:
            continue
        if out.objective >= best_v - INT_TOL * (1 + abs(best_v)):
            continue
        x = out.x[:n]
        if best_x is None:
            # rounding at the root gives an initial incumbent
            xr = problem.round(x)
            vr = robust_value(costs, xr)
            if np.all(xr >= lo) and np.all(xr <= hi) and vr < best_v:
                best_x, best_v = xr, vr
        frac = np.abs(x - np.round(x))
        if frac.max() <= INT_TOL:
            xi = np.round(x)
            v = robust_value(costs, xi)
            if v < best_v:
                best_x, best_v = xi, v
            continue
        if out.objective >= best_v - INT_TOL * (1 + abs(best_v)):
            continue
        dist = np.abs(x - 0.5)
        k = int(np.argmin(dist))
        lo1, hi1 = lo.copy(), hi.copy()
        lo1[k] = 1.0
        lo0, hi0 = lo.copy(), hi.copy()
        hi0[k] = 0.0
        if x[k] >= 0.5:
            stack.append((lo0, hi0))
            stack.append((lo1, hi1))
        else:
            stack.append((lo1, hi1))
            stack.append((lo0, hi0))
    return RobustResult(best_x, robust_value(costs, best_x), nodes, lp_solves,
                        time.perf_counter() - start, True)


def _tsp_bnb(instance: Instance, time_limit: float) -> RobustResult:
    start = time.perf_counter()
    m = instance.m
    problem = Tsp(m)
    C = instance.costs.reshape(instance.N, m, m)
    tour, value, nodes, timed_out = kernels.tsp_robust_bnb(C, time_limit=time_limit)
    if timed_out:
        inc = None if tour is None else (problem.tour_to_x(tour), value)
        raise TimeLimitError("robust tsp solve hit the time limit", incumbent=inc)
    x = problem.tour_to_x(tour)
    return RobustResult(x, robust_value(instance.costs, x), int(nodes), 0,
                        time.perf_counter() - start, True)


def robust_values_all(instance: Instance) -> np.ndarray:
    """Robust value of every feasible solution, in enumeration order."""
    X = problem_for(instance).feasible_matrix()
    return (X @ instance.costs.T).max(axis=1)


def sorted_objective_vector(instance: Instance) -> np.ndarray:
    return np.sort(robust_values_all(instance))


def robust_solve_enumeration(instance: Instance) -> tuple[np.ndarray, float]:
    """Brute-force oracle: first solution in enumeration order attaining the minimum."""
    X = problem_for(instance).feasible_matrix()
    vals = (X @ instance.costs.T).max(axis=1)
    r = int(np.argmin(vals))
    return X[r], float(vals[r])
