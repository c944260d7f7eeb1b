"""Column generation over the relaxed master problem.

Each column assigns one scenario's cost vector to one candidate. Candidates may
draw different cost vectors from the same scenario box, which makes the
restricted master an LP relaxation of the exact master problem. The scenario
vectors of the outer problem appear as linking variables bounding every
column's contribution from above.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import UncertaintyBox
from .lp import EQ, LE, LpModel, solve_lp
from .mro import MasterSolution, _pool_matrix, best_assignment, box_arrays, default_start

PRICE_TOL = 1e-6
MAX_COLUMNS = 10**4


class ColumnLimitError(RuntimeError):
    pass


@dataclass
class Column:
    owner: int  # candidate j
    scenario: int  # scenario i
    d: np.ndarray  # contribution c_k * x^j_k on scenario i (length n)
    c: np.ndarray  # generating cost vector, member of box i

    @property
    def value(self) -> float:
        return float(self.d.sum())


@dataclass
class RmpDuals:
    gamma: np.ndarray  # K, epigraph rows
    delta: np.ndarray  # K, convexity rows
    pi: np.ndarray  # N x K x n, linking rows (zero off the candidate's support)


@dataclass
class RmpResult:
    value: float
    alpha: np.ndarray
    scenarios: np.ndarray
    duals: RmpDuals


def column_for(j: int, i: int, c, x) -> Column:
    c = np.asarray(c, dtype=np.float64)
    return Column(j, i, c * np.asarray(x), c.copy())


def rmp_solve(columns: list[Column], boxes: list[UncertaintyBox], X) -> RmpResult:
    """LP optimum of the restricted master with continuous column weights."""
    X = _pool_matrix(X)
    K, n = X.shape
    lo, hi, sums = box_arrays(boxes)
    N = len(boxes)
    P = len(columns)
    owners = {c.owner for c in columns}
    if owners != set(range(K)):
        raise ValueError("every candidate needs at least one column")
    # variables: t, c^i_k, alpha_p
    nv = 1 + N * n + P
    cvar = lambda i, k: 1 + i * n + k  # noqa: E731
    avar = lambda p: 1 + N * n + p  # noqa: E731
    rows, rel, rhs = [], [], []
    gamma_rows, delta_rows = [], []
    for j in range(K):
        r = np.zeros(nv)
        r[0] = 1.0
        for p, col in enumerate(columns):
            if col.owner == j:
                r[avar(p)] = -col.value
        gamma_rows.append(len(rows))
        rows.append(r)
        rel.append(LE)
        rhs.append(0.0)
    for j in range(K):
        r = np.zeros(nv)
        for p, col in enumerate(columns):
            if col.owner == j:
                r[avar(p)] = 1.0
        delta_rows.append(len(rows))
        rows.append(r)
        rel.append(EQ)
        rhs.append(1.0)
    pi_rows = {}
    for i in range(N):
        for j in range(K):
            for k in np.flatnonzero(X[j]):
                r = np.zeros(nv)
                r[cvar(i, k)] = -1.0
                for p, col in enumerate(columns):
                    if col.owner == j and col.scenario == i:
                        r[avar(p)] = col.d[k]
                pi_rows[i, j, k] = len(rows)
                rows.append(r)
                rel.append(LE)
                rhs.append(0.0)
    for i in range(N):
        r = np.zeros(nv)
        r[cvar(i, 0): cvar(i, 0) + n] = 1.0
        rows.append(r)
        rel.append(EQ)
        rhs.append(sums[i])
    obj = np.zeros(nv)
    obj[0] = 1.0
    model = LpModel("max", obj, np.array(rows), rel, np.array(rhs),
                    np.concatenate([[-np.inf], lo.ravel(), np.zeros(P)]),
                    np.concatenate([[np.inf], hi.ravel(), np.full(P, np.inf)]))
    out = solve_lp(model)
    if not out.optimal:
        raise AssertionError(f"restricted master is {out.status}; initial columns must be feasible")
    pi = np.zeros((N, K, n))
    for (i, j, k), r in pi_rows.items():
        pi[i, j, k] = out.duals[r]
    duals = RmpDuals(out.duals[gamma_rows], out.duals[delta_rows], pi)
    scen = np.clip(out.x[1:1 + N * n].reshape(N, n), lo, hi)
    return RmpResult(out.objective, out.x[1 + N * n:], scen, duals)


def reduced_cost(col: Column, duals: RmpDuals, x) -> float:
    j, i = col.owner, col.scenario
    return float(duals.gamma[j] * (col.d @ x) - col.d @ duals.pi[i, j] - duals.delta[j])


def price(j: int, duals: RmpDuals, boxes: list[UncertaintyBox], x) -> Column | None:
    """Most positive reduced-cost column for candidate j, or None.

    One LP per scenario: max sum_k d_k (x_k gamma_j - pi_ijk) - delta_j with
    0 <= d <= c and c in the scenario's box.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    best, best_rc = None, PRICE_TOL
    for i, box in enumerate(boxes):
        w = x * duals.gamma[j] - duals.pi[i, j]
        # variables d_k then c_k
        A = np.zeros((n + 1, 2 * n))
        A[:n, :n] = np.eye(n)
        A[:n, n:] = -np.eye(n)
        A[n, n:] = 1.0
        model = LpModel("max", np.concatenate([w, np.zeros(n)]), A,
                        [LE] * n + [EQ], np.concatenate([np.zeros(n), [box.target_sum]]),
                        np.concatenate([np.zeros(n), box.lower]),
                        np.concatenate([box.upper, box.upper]))
        out = solve_lp(model)
        rc = out.objective - duals.delta[j]
        if rc > best_rc:
            d = np.clip(out.x[:n], 0.0, None) * (x > 0)
            c = np.clip(out.x[n:], box.lower, box.upper)
            best, best_rc = Column(j, i, d, c), rc
    return best


def colgen_master(pool, boxes: list[UncertaintyBox], init_costs=None,
                  max_columns: int = MAX_COLUMNS) -> MasterSolution:
    """Column generation to LP optimality of the relaxed master.

    Each candidate starts with one column built from the start scenarios (the
    box seeds by default) on its worst scenario, which keeps the first restricted
    master feasible. ``history`` records the RMP value per round.
    """
    X = _pool_matrix(pool)
    K = X.shape[0]
    start = default_start(boxes) if init_costs is None else np.asarray(init_costs, dtype=np.float64)
    columns = [column_for(j, i, start[i], X[j]) for j, i in enumerate(best_assignment(start, X))]
    history = []
    while True:
        res = rmp_solve(columns, boxes, X)
        if history and res.value < history[-1] - 1e-7 * (1 + abs(history[-1])):
            raise AssertionError("restricted master value decreased after adding columns")
        history.append(res.value)
        added = 0
        for j in range(K):
            col = price(j, res.duals, boxes, X[j])
            if col is not None:
                if reduced_cost(col, res.duals, X[j]) <= PRICE_TOL:
                    continue
                columns.append(col)
                added += 1
        if not added:
            break
        if len(columns) > max_columns:
            raise ColumnLimitError(f"column generation exceeded {max_columns} columns")
    sol = MasterSolution(res.scenarios, best_assignment(res.scenarios, X), res.value, history)
    sol.nodes = len(columns)
    return sol
