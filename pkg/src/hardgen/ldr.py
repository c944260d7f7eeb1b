"""Linear decision rule approximation of the outer problem, for Selection.

Each scenario gets an affine weight lam^i(x) = lam^i_0 + sum_k lam^i_k x_k. The
requirement that t is below the weighted cost of every selection is replaced
by LP duals of its McCormick relaxation, and the rule bounds 0 <= lam^i(x),
sum_i lam^i(x) <= 1 are dualized over the exact Selection polyhedron. What is
left is bilinear only in lam * c, which we attack by fixing one block at a time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Instance, build_uncertainty
from .lp import EQ, GE, LE, LpBuilder, LpModel, solve_lp
from .mro import box_arrays

IMPROVE_TOL = 1e-9
INF = float("inf")


class UnsupportedProblemError(ValueError):
    pass


@dataclass
class LdrState:
    lam0: np.ndarray  # N
    lam: np.ndarray  # N x n
    c: np.ndarray  # N x n
    t: float
    duals: dict  # xi, zeta, theta, eta, pi, rho, alpha, beta at the last solve


@dataclass
class LdrTemplate:
    """Variable layout and row families of the dualized model.

    ``bilinear`` lists (row, rule column, cost column) triples: the row gets
    -lam * c, which becomes linear once one of the two columns is fixed.
    """

    n: int
    N: int
    p: int
    lo: np.ndarray
    hi: np.ndarray
    sums: np.ndarray
    builder_rows: list  # (coeff dict, relation, rhs)
    bilinear: list
    var_lo: list
    var_hi: list
    obj: np.ndarray
    index: dict
    row_counts: dict

    def model(self, lam0=None, lam=None, c=None) -> LpModel:
        """Instantiate with either the rule block or the cost block fixed."""
        if (c is None) == (lam0 is None):
            raise ValueError("fix exactly one of the rule block and the cost block")
        lo = np.array(self.var_lo, dtype=np.float64)
        hi = np.array(self.var_hi, dtype=np.float64)
        ix = self.index
        if c is not None:
            fixed = np.asarray(c, dtype=np.float64).ravel()
            cols = ix["c"].ravel()
        else:
            fixed = np.concatenate([lam0, np.asarray(lam).ravel()])
            cols = np.concatenate([ix["lam0"], ix["lam"].ravel()])
        lo[cols] = fixed
        hi[cols] = fixed
        value = dict(zip(cols.tolist(), fixed.tolist()))
        A = np.zeros((len(self.builder_rows), len(lo)))
        rel, rhs = [], []
        for r, (coeffs, relation, b) in enumerate(self.builder_rows):
            for j, a in coeffs.items():
                A[r, j] += a
            rel.append(relation)
            rhs.append(b)
        for r, rule_col, cost_col in self.bilinear:
            if rule_col in value:
                A[r, cost_col] -= value[rule_col]
            else:
                A[r, rule_col] -= value[cost_col]
        return LpModel("max", self.obj.copy(), A, rel, np.array(rhs), lo, hi)


def ldr_build(instance: Instance, boxes=None) -> LdrTemplate:
    if instance.kind != "selection":
        raise UnsupportedProblemError("the decision rule model is only built for selection")
    if boxes is None:
        boxes = build_uncertainty(instance, 0.0)
    n, N, p = instance.n, instance.N, instance.p
    lo, hi, sums = box_arrays(boxes)
    B = LpBuilder("max")
    ix = {
        "lam0": np.array(B.vars(N, -INF, INF, name="lam0")),
        "lam": np.array(B.vars(N * n, -INF, INF, name="lam")).reshape(N, n),
        "c": np.array([B.var(lo[i, k], hi[i, k], name=f"c[{i},{k}]")
                       for i in range(N) for k in range(n)]).reshape(N, n),
        "xi": np.array(B.vars(n * n, name="xi")).reshape(n, n),
        "zeta": np.array(B.vars(n * n, obj=-1.0, name="zeta")).reshape(n, n),
        "theta": np.array(B.vars(n, obj=-1.0, name="theta")),
        "eta": B.var(-INF, INF, obj=float(p), name="eta"),
        "pi": B.var(-INF, INF, name="pi"),
        "rho": np.array(B.vars(n, name="rho")),
        "alpha": np.array(B.vars(N, -INF, INF, name="alpha")),
        "beta": np.array(B.vars(N * n, name="beta")).reshape(N, n),
    }
    xi, zeta = ix["xi"], ix["zeta"]
    bilinear = []
    counts = {}
    # weighted cost of x is bounded below by the dual of its McCormick relaxation
    for k in range(n):
        coeffs = []
        for l in range(n):
            coeffs += [(xi[k, l], 1.0), (xi[l, k], 1.0), (zeta[k, l], -1.0), (zeta[l, k], -1.0)]
        coeffs += [(ix["eta"], 1.0), (ix["theta"][k], -1.0)]
        r = B.row(coeffs, LE, 0.0)
        bilinear += [(r, ix["lam0"][i], ix["c"][i, k]) for i in range(N)]
    counts["cost_x"] = n
    for k in range(n):
        for l in range(n):
            r = B.row([(xi[k, l], -2.0), (zeta[k, l], 1.0)], LE, 0.0)
            bilinear += [(r, ix["lam"][i, l], ix["c"][i, k]) for i in range(N)]
    counts["cost_y"] = n * n
    # sum_i lam^i(x) <= 1 over all selections
    B.row([(j, 1.0) for j in ix["lam0"]] + [(ix["pi"], float(p))] + [(j, 1.0) for j in ix["rho"]],
          LE, 1.0)
    counts["rule_sum"] = 1
    for k in range(n):
        B.row([(ix["pi"], 1.0), (ix["rho"][k], 1.0)] + [(ix["lam"][i, k], -1.0) for i in range(N)],
              GE, 0.0)
    counts["rule_sum_dual"] = n
    # lam^i(x) >= 0 over all selections
    for i in range(N):
        B.row([(ix["lam0"][i], 1.0), (ix["alpha"][i], float(p))]
              + [(ix["beta"][i, k], -1.0) for k in range(n)], GE, 0.0)
    counts["rule_nonneg"] = N
    for i in range(N):
        for k in range(n):
            B.row([(ix["alpha"][i], 1.0), (ix["beta"][i, k], -1.0), (ix["lam"][i, k], -1.0)],
                  LE, 0.0)
    counts["rule_nonneg_dual"] = N * n
    for i in range(N):
        B.row([(j, 1.0) for j in ix["c"][i]], EQ, sums[i])
    counts["box_sum"] = N
    model = B.build()
    rows = [(r, rel, b) for r, rel, b in zip(B._rows, B._rel, B._rhs)]
    return LdrTemplate(n, N, p, lo, hi, sums, rows, bilinear, list(model.lo), list(model.hi),
                       model.c, ix, counts)


def _state(tpl: LdrTemplate, x: np.ndarray, t: float) -> LdrState:
    ix = tpl.index
    duals = {k: np.asarray(x[v]) for k, v in ix.items() if k not in ("lam0", "lam", "c")}
    c = np.clip(x[ix["c"]], tpl.lo, tpl.hi)
    return LdrState(np.asarray(x[ix["lam0"]]), np.asarray(x[ix["lam"]]), c, t, duals)


def _solve(model: LpModel):
    out = solve_lp(model)
    if not out.optimal:
        raise RuntimeError(f"decision rule LP returned {out.status}")
    return out


def ldr_solve(instance: Instance, b: float, max_iters: int = 100,
              history: list | None = None) -> tuple[Instance, float]:
    """Block alternation from the seed costs; returns the last scenarios and t.

    The first half-step optimizes the costs under the uniform constant rule,
    after which rule and cost blocks alternate until t stops improving.
    """
    boxes = build_uncertainty(instance, b)
    tpl = ldr_build(instance, boxes)
    N, n = instance.N, instance.n
    if np.array_equal(tpl.lo, tpl.hi):
        # singleton boxes: only the rule block can move
        out = _solve(tpl.model(c=tpl.lo))
        if history is not None:
            history.append(out.objective)
        return instance.with_costs(instance.costs), float(out.objective)
    lam0 = np.full(N, 1.0 / N)
    lam = np.zeros((N, n))
    out = _solve(tpl.model(lam0=lam0, lam=lam))
    st = _state(tpl, out.x, out.objective)
    if history is not None:
        history.append(st.t)
    for _ in range(max_iters):
        prev = st.t
        out = _solve(tpl.model(c=st.c))
        st = _state(tpl, out.x, out.objective)
        if history is not None:
            history.append(st.t)
        out = _solve(tpl.model(lam0=st.lam0, lam=st.lam))
        st = _state(tpl, out.x, out.objective)
        if history is not None:
            history.append(st.t)
        if st.t <= prev + IMPROVE_TOL:
            break
    if not np.all(np.isfinite(st.lam)) or not np.all(np.isfinite(st.lam0)):
        raise RuntimeError("decision rule coefficients are not finite")
    return instance.with_costs(st.c), float(st.t)
