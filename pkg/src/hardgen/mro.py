"""The outer "maximize the robust objective" problem.

:func:`mro_generate` alternates between a master problem, which picks scenarios
inside their boxes so that every candidate in a finite pool is expensive, and
the robust inner problem on those scenarios, whose solution joins the pool.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import Instance, UncertaintyBox, build_uncertainty
from .lp import EQ, LE, LpModel, solve_lp
from .robust import TimeLimitError, robust_solve_exact, robust_solve_heuristic

IMPROVE_TOL = 1e-9
GAP_TOL = 1e-6
ENUMERATION_LIMIT = 10**4


@dataclass
class MasterSolution:
    scenarios: np.ndarray  # N x n
    assignment: list[int]  # scenario index serving each candidate
    objective: float
    history: list[float] = field(default_factory=list)
    nodes: int = 0


@dataclass
class IterationLog:
    master_value: float
    upper: float  # best master bound so far; inf for the alternating master
    lower: float
    scenarios: np.ndarray
    new_x: np.ndarray


@dataclass
class MroRun:
    iterations: list[IterationLog] = field(default_factory=list)
    stop_reason: str = ""
    pool: list[np.ndarray] = field(default_factory=list)
    best_lower: float = float("-inf")
    master_nodes: int = 0
    wall_time: float = 0.0


class CandidatePool:
    """Distinct feasible solutions; membership is exact binary equality."""

    def __init__(self, xs=()):
        self._xs: list[np.ndarray] = []
        self._keys: set[bytes] = set()
        for x in xs:
            self.add(x)

    @staticmethod
    def _key(x) -> bytes:
        return np.asarray(np.round(x), dtype=np.int8).tobytes()

    def __contains__(self, x) -> bool:
        return self._key(x) in self._keys

    def add(self, x) -> bool:
        k = self._key(x)
        if k in self._keys:
            return False
        self._keys.add(k)
        self._xs.append(np.asarray(np.round(x), dtype=np.float64))
        return True

    def __len__(self):
        return len(self._xs)

    def __iter__(self):
        return iter(self._xs)

    def matrix(self) -> np.ndarray:
        return np.array(self._xs)


def _pool_matrix(pool) -> np.ndarray:
    if isinstance(pool, CandidatePool):
        return pool.matrix()
    return np.atleast_2d(np.asarray(pool, dtype=np.float64))


def box_arrays(boxes: list[UncertaintyBox]):
    lo = np.array([b.lower for b in boxes])
    hi = np.array([b.upper for b in boxes])
    sums = np.array([b.target_sum for b in boxes])
    return lo, hi, sums


def scenario_lp(X, boxes, assignment, cap=None) -> LpModel:
    """max t s.t. t <= c^{a(j)} x^j for assigned j, c^i in box i, t <= cap.

    ``assignment[j]`` is a scenario index or -1 (candidate dropped).
    Variable 0 is t, then c^i_k at 1 + i*n + k.
    """
    lo, hi, sums = box_arrays(boxes)
    N, n = lo.shape
    nv = 1 + N * n
    rows, rel, rhs = [], [], []
    for j, i in enumerate(assignment):
        if i < 0:
            continue
        r = np.zeros(nv)
        r[0] = 1.0
        r[1 + i * n: 1 + (i + 1) * n] = -X[j]
        rows.append(r)
        rel.append(LE)
        rhs.append(0.0)
    if cap is not None:
        r = np.zeros(nv)
        r[0] = 1.0
        rows.append(r)
        rel.append(LE)
        rhs.append(cap)
    for i in range(N):
        r = np.zeros(nv)
        r[1 + i * n: 1 + (i + 1) * n] = 1.0
        rows.append(r)
        rel.append(EQ)
        rhs.append(sums[i])
    c = np.zeros(nv)
    c[0] = 1.0
    return LpModel("max", c, np.array(rows), rel, np.array(rhs),
                   np.concatenate([[-np.inf], lo.ravel()]),
                   np.concatenate([[np.inf], hi.ravel()]))


def _solve_assignment(X, boxes, assignment, cap=None):
    out = solve_lp(scenario_lp(X, boxes, assignment, cap))
    if not out.optimal:
        raise RuntimeError(f"scenario LP returned {out.status}")
    N = len(boxes)
    n = X.shape[1]
    c = out.x[1:].reshape(N, n)
    lo, hi, _ = box_arrays(boxes)
    return out.objective, np.clip(c, lo, hi)


def best_assignment(scenarios, X) -> list[int]:
    """For each candidate the scenario maximizing its cost (lowest index on ties)."""
    return [int(i) for i in np.argmax(X @ scenarios.T, axis=1)]


def pool_value(scenarios, X) -> float:
    """min over candidates of the max scenario cost."""
    return float((X @ scenarios.T).max(axis=1).min())


def master_solve_alternating(pool, boxes, init_costs=None) -> MasterSolution:
    """Alternate argmax assignment and the scenario LP until no improvement."""
    X = _pool_matrix(pool)
    if init_costs is None:
        init_costs = default_start(boxes)
    c = np.array(init_costs, dtype=np.float64)
    z_prev = 0.0
    history = []
    assignment = best_assignment(c, X)
    best = (pool_value(c, X), c, assignment)
    while True:
        assignment = best_assignment(c, X)
        z, c_new = _solve_assignment(X, boxes, assignment)
        history.append(z)
        if z > best[0]:
            best = (z, c_new, assignment)
        c = c_new
        if z_prev >= z - IMPROVE_TOL:
            break
        z_prev = z
    z, c, _ = best
    return MasterSolution(c, best_assignment(c, X), pool_value(c, X), history)


def default_start(boxes):
    """The boxes' seed scenarios, or a feasible interior point where unknown."""
    if all(b.seed is not None for b in boxes):
        return np.array([b.seed for b in boxes])
    lo, hi, sums = box_arrays(boxes)
    span = (hi - lo).sum(axis=1)
    frac = np.where(span > 0, (sums - lo.sum(axis=1)) / np.where(span > 0, span, 1), 0)
    return lo + frac[:, None] * (hi - lo)


def _candidate_caps(X, boxes) -> np.ndarray:
    """Largest cost any scenario box can give each candidate."""
    return np.array([max(b.max_dot(x) for b in boxes) for x in X])


def master_solve_exact(pool, boxes, init_costs=None, time_limit=float("inf"),
                       enumeration_limit=ENUMERATION_LIMIT) -> MasterSolution:
    """Global optimum over assignments x scenario LPs.

    Exhaustive enumeration when N^K is at most ``enumeration_limit``; otherwise a
    depth-first branch-and-bound over the assignment whose node bound is the
    scenario LP with the unassigned candidates dropped (each still capped by its
    largest achievable cost).
    """
    start = time.perf_counter()
    X = _pool_matrix(pool)
    K = X.shape[0]
    N = len(boxes)
    caps = _candidate_caps(X, boxes)
    if N ** K <= enumeration_limit:
        return _master_enumerate(X, boxes, start, time_limit)

    warm = master_solve_alternating(X, boxes, init_costs)
    inc_val, inc_c = warm.objective, warm.scenarios
    nodes = 0
    stack = [[-1] * K]
    while stack:
        if time.perf_counter() - start > time_limit:
            raise TimeLimitError("master problem hit the time limit",
                                 incumbent=MasterSolution(inc_c, best_assignment(inc_c, X), inc_val))
        assign = stack.pop()
        nodes += 1
        free = [j for j in range(K) if assign[j] < 0]
        cap = float(caps[free].min()) if free else None
        z, c = _solve_assignment(X, boxes, assign, cap)
        if z <= inc_val + IMPROVE_TOL:
            continue
        vals = X @ c.T  # K x N
        reach = vals.max(axis=1)
        if not free or reach[free].min() >= z - IMPROVE_TOL:
            # greedy completion already attains the node bound
            v = pool_value(c, X)
            if v > inc_val:
                inc_val, inc_c = v, c
            continue
        j = min(free, key=lambda j: (reach[j], j))
        order = sorted(range(N), key=lambda i: (-vals[j, i], i))
        for i in reversed(order):
            child = list(assign)
            child[j] = i
            stack.append(child)
    return MasterSolution(inc_c, best_assignment(inc_c, X), inc_val, nodes=nodes)


def _master_enumerate(X, boxes, start, time_limit) -> MasterSolution:
    K = X.shape[0]
    N = len(boxes)
    best_val, best_c = -np.inf, None
    count = 0
    for code in range(N ** K):
        if time.perf_counter() - start > time_limit and best_c is not None:
            raise TimeLimitError("master problem hit the time limit",
                                 incumbent=MasterSolution(best_c, best_assignment(best_c, X), best_val))
        assign = []
        for _ in range(K):
            assign.append(code % N)
            code //= N
        z, c = _solve_assignment(X, boxes, assign)
        count += 1
        if z > best_val + IMPROVE_TOL:
            best_val, best_c = z, c
    return MasterSolution(best_c, best_assignment(best_c, X), pool_value(best_c, X),
                          nodes=count)


MASTERS = ("exact", "alternating", "colgen")
INNERS = ("exact", "heuristic")


def mro_generate(instance: Instance, b: float, master: str = "exact",
                 inner: str = "exact", time_limit: float = float("inf"),
                 max_iters: int | None = None) -> tuple[Instance, MroRun]:
    """Iterate master and inner solves; return the hardened instance and the log.

    The pool is seeded with the inner solution on the original costs. The time
    limit is only checked between iterations.
    """
    from .colgen import colgen_master

    if master not in MASTERS or inner not in INNERS:
        raise ValueError(f"unknown master/inner {master!r}/{inner!r}")
    start = time.perf_counter()
    boxes = build_uncertainty(instance, b)
    run = MroRun()

    def remaining():
        return max(time_limit - (time.perf_counter() - start), 0.0)

    def solve_inner(inst):
        if inner == "exact":
            return robust_solve_exact(inst, time_limit=remaining())
        return robust_solve_heuristic(inst)

    incumbent = np.array(instance.costs)
    try:
        seed = solve_inner(instance)
    except TimeLimitError as exc:
        # without any seed solution there is nothing to return
        if exc.incumbent is None or exc.incumbent[0] is None:
            raise
        run.pool = [np.asarray(exc.incumbent[0], dtype=np.float64)]
        run.best_lower = float(exc.incumbent[1])
        run.stop_reason = "time_limit"
        run.wall_time = time.perf_counter() - start
        return instance.with_costs(incumbent), run
    pool = CandidatePool([seed.x])
    lower = seed.value
    upper = np.inf
    warm = incumbent
    it = 0
    while True:
        if max_iters is not None and it >= max_iters:
            run.stop_reason = "iteration_limit"
            break
        if time.perf_counter() - start > time_limit:
            run.stop_reason = "time_limit"
            break
        it += 1
        X = pool.matrix()
        try:
            if master == "exact":
                ms = master_solve_exact(X, boxes, warm, time_limit=remaining())
            elif master == "alternating":
                ms = master_solve_alternating(X, boxes, warm)
            else:
                ms = colgen_master(X, boxes, warm)
        except TimeLimitError:
            run.stop_reason = "time_limit"
            break
        run.master_nodes += ms.nodes
        scen = np.clip(ms.scenarios, 0.0, instance.C)
        if master != "alternating":
            upper = min(upper, ms.objective)
        try:
            r = solve_inner(instance.with_costs(scen))
        except TimeLimitError:
            run.stop_reason = "time_limit"
            break
        if r.value > lower + IMPROVE_TOL:
            lower, incumbent = r.value, scen
        warm = scen
        run.iterations.append(IterationLog(ms.objective, upper, lower, scen, r.x))
        if master == "exact" and inner == "exact" and upper - lower <= GAP_TOL:
            run.stop_reason = "converged"
            break
        if not pool.add(r.x):
            run.stop_reason = "converged" if upper - lower <= GAP_TOL else "repeat_candidate"
            break
    run.pool = list(pool)
    run.best_lower = lower
    run.wall_time = time.perf_counter() - start
    return instance.with_costs(incumbent), run
