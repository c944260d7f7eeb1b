"""Dense bounded-variable primal simplex.

Every LP in the package goes through :func:`solve_lp`: scenario LPs, LP
relaxations inside branch-and-bound, the column generation master, the
decision-rule blocks and the midpoint relaxations. Problems are small (a few
hundred columns at most) so the basis inverse is kept dense and refactorized
periodically.

Duals are reported as shadow prices d(objective)/d(rhs): for a maximization a
``<=`` row has a nonnegative dual and a ``>=`` row a nonpositive one; the signs
flip for a minimization, equality rows are free.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

INF = float("inf")

FEAS_TOL = 1e-7
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
HARRIS_TOL = 1e-9
BLAND_AFTER = 500
REFACTOR_EVERY = 50
MAX_ITERS = 100_000

LE, EQ, GE = "<=", "=", ">="


class LpNumericalError(RuntimeError):
    """The simplex failed to converge or lost accuracy beyond repair."""


@dataclass
class LpModel:
    """max/min c.x subject to rows A x (<=|=|>=) rhs and lo <= x <= hi."""

    sense: str
    c: np.ndarray
    A: np.ndarray
    relations: list[str]
    rhs: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    names: list[str] | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=np.float64)
        nvar = self.c.shape[0]
        self.A = np.asarray(self.A, dtype=np.float64).reshape(-1, nvar)
        self.rhs = np.asarray(self.rhs, dtype=np.float64)
        self.lo = np.asarray(self.lo, dtype=np.float64)
        self.hi = np.asarray(self.hi, dtype=np.float64)
        if self.sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")
        if self.A.shape[0] != len(self.relations) or self.rhs.shape != (self.A.shape[0],):
            raise ValueError("row dimensions disagree")
        if self.lo.shape != (nvar,) or self.hi.shape != (nvar,):
            raise ValueError("bound dimensions disagree")
        if any(r not in (LE, EQ, GE) for r in self.relations):
            raise ValueError("relations must be '<=', '=' or '>='")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.A))
                and np.all(np.isfinite(self.rhs))):
            raise ValueError("coefficients must be finite")

    @property
    def num_vars(self) -> int:
        return self.c.shape[0]

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]


@dataclass
class LpOutcome:
    status: str  # "optimal" | "infeasible" | "unbounded"
    objective: float = float("nan")
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class LpBuilder:
    """Incremental construction of an :class:`LpModel` by named variables."""

    def __init__(self, sense: str = "max"):
        self.sense = sense
        self._obj: list[float] = []
        self._lo: list[float] = []
        self._hi: list[float] = []
        self._names: list[str] = []
        self._rows: list[dict[int, float]] = []
        self._rel: list[str] = []
        self._rhs: list[float] = []

    def var(self, lo=0.0, hi=INF, obj=0.0, name="") -> int:
        self._obj.append(float(obj))
        self._lo.append(float(lo))
        self._hi.append(float(hi))
        self._names.append(name)
        return len(self._obj) - 1

    def vars(self, count, lo=0.0, hi=INF, obj=0.0, name="") -> list[int]:
        return [self.var(lo, hi, obj, f"{name}[{i}]") for i in range(count)]

    def row(self, coeffs, relation: str, rhs: float) -> int:
        """Add a row; ``coeffs`` maps variable index -> coefficient (repeats add up)."""
        if isinstance(coeffs, dict):
            items = coeffs.items()
        else:
            items = coeffs
        merged: dict[int, float] = {}
        for j, a in items:
            merged[j] = merged.get(j, 0.0) + float(a)
        self._rows.append(merged)
        self._rel.append(relation)
        self._rhs.append(float(rhs))
        return len(self._rows) - 1

    def set_obj(self, j: int, value: float) -> None:
        self._obj[j] = float(value)

    def build(self) -> LpModel:
        nvar = len(self._obj)
        A = np.zeros((len(self._rows), nvar))
        for i, r in enumerate(self._rows):
            for j, a in r.items():
                A[i, j] = a
        return LpModel(self.sense, np.array(self._obj), A, list(self._rel),
                       np.array(self._rhs), np.array(self._lo), np.array(self._hi),
                       names=list(self._names))


@dataclass
class _State:
    A: np.ndarray
    b: np.ndarray
    cost: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    x: np.ndarray
    basis: np.ndarray
    is_basic: np.ndarray
    Binv: np.ndarray = field(default=None)
    iterations: int = 0
    degenerate: int = 0


def _refactor(st: _State) -> None:
    B = st.A[:, st.basis]
    try:
        st.Binv = np.linalg.inv(B)
    except np.linalg.LinAlgError as exc:
        raise LpNumericalError("singular basis") from exc
    nb = ~st.is_basic
    st.x[st.basis] = st.Binv @ (st.b - st.A[:, nb] @ st.x[nb])


def _simplex(st: _State) -> str:
    """Minimize cost.x over A x = b, lo <= x <= hi from a primal-feasible basis."""
    m, ncol = st.A.shape
    _refactor(st)
    scale = max(1.0, float(np.abs(st.cost).max(initial=0.0)))
    dtol = OPT_TOL * scale
    since_refactor = 0
    bland = False
    while True:
        if st.iterations >= MAX_ITERS:
            raise LpNumericalError("iteration limit reached")
        y = st.cost[st.basis] @ st.Binv
        d = st.cost - y @ st.A
        d[st.basis] = 0.0
        up = (d < -dtol) & (st.x < st.hi - FEAS_TOL) & ~st.is_basic
        down = (d > dtol) & (st.x > st.lo + FEAS_TOL) & ~st.is_basic
        eligible = up | down
        if not eligible.any():
            return "optimal"
        if bland:
            q = int(np.flatnonzero(eligible)[0])
        else:
            score = np.where(eligible, np.abs(d), -1.0)
            q = int(np.argmax(score))
        direction = 1.0 if up[q] else -1.0
        alpha = st.Binv @ st.A[:, q]
        delta = -direction * alpha  # change of basic values per unit step

        theta = st.hi[q] - st.lo[q]  # bound flip
        leave = -1
        leave_to = 0.0
        xb = st.x[st.basis]
        lob = st.lo[st.basis]
        hib = st.hi[st.basis]
        ratios = np.full(m, INF)
        dec = (delta < -PIVOT_TOL) & np.isfinite(lob)
        inc = (delta > PIVOT_TOL) & np.isfinite(hib)
        ratios[dec] = np.maximum(xb[dec] - lob[dec], 0.0) / -delta[dec]
        ratios[inc] = np.maximum(hib[inc] - xb[inc], 0.0) / delta[inc]
        rmin = ratios.min(initial=INF)
        if bland:
            if rmin < theta:
                ties = np.flatnonzero(ratios <= rmin + 1e-12)
                leave = int(ties[np.argmin(st.basis[ties])])
                theta = rmin
        elif rmin < theta:
            # Harris: bounds relaxed by the feasibility tolerance give a
            # longest admissible step; among rows blocking within it take
            # the largest pivot, which keeps the basis well conditioned
            relaxed = np.full(m, INF)
            relaxed[dec] = (np.maximum(xb[dec] - lob[dec], 0.0) + HARRIS_TOL) / -delta[dec]
            relaxed[inc] = (np.maximum(hib[inc] - xb[inc], 0.0) + HARRIS_TOL) / delta[inc]
            tmax = relaxed.min()
            if theta > tmax:
                cand = np.flatnonzero(ratios <= tmax)
                leave = int(cand[np.argmax(np.abs(delta[cand]))])
                theta = ratios[leave]
        if leave >= 0:
            leave_to = lob[leave] if delta[leave] < 0 else hib[leave]
        if not np.isfinite(theta):
            return "unbounded"

        st.iterations += 1
        if theta * abs(d[q]) <= 1e-9 * scale:
            st.degenerate += 1
            if st.degenerate > BLAND_AFTER:
                bland = True
        else:
            # the objective strictly improved, so no earlier basis can repeat
            st.degenerate = 0
            bland = False
        st.x[st.basis] = xb + theta * delta
        st.x[q] += direction * theta
        if leave < 0:
            # entering variable reached its opposite bound
            st.x[q] = st.hi[q] if direction > 0 else st.lo[q]
            continue
        out = st.basis[leave]
        st.x[out] = leave_to
        st.is_basic[out] = False
        st.is_basic[q] = True
        st.basis[leave] = q
        piv = alpha[leave]
        if abs(piv) < PIVOT_TOL:
            _refactor(st)
            since_refactor = 0
            continue
        row = st.Binv[leave] / piv
        st.Binv -= np.outer(alpha, row)
        st.Binv[leave] = row
        since_refactor += 1
        if since_refactor >= REFACTOR_EVERY:
            _refactor(st)
            since_refactor = 0


def solve_lp(model: LpModel) -> LpOutcome:
    """Solve ``model`` by the two-phase bounded primal simplex."""
    m, nvar = model.A.shape
    sign = -1.0 if model.sense == "max" else 1.0
    if np.any(model.lo > model.hi + FEAS_TOL):
        return LpOutcome("infeasible")

    slack_lo = np.array([0.0 if r != GE else -INF for r in model.relations])
    slack_hi = np.array([0.0 if r == EQ else (INF if r == LE else 0.0)
                         for r in model.relations])

    x0 = np.where(np.isfinite(model.lo), model.lo,
                  np.where(np.isfinite(model.hi), model.hi, 0.0))
    resid = model.rhs - model.A @ x0
    s0 = np.clip(resid, slack_lo, slack_hi)
    viol = resid - s0
    art_rows = np.flatnonzero(np.abs(viol) > 0.0)
    na = len(art_rows)

    A = np.zeros((m, nvar + m + na))
    A[:, :nvar] = model.A
    A[:, nvar:nvar + m] = np.eye(m)
    for a, r in enumerate(art_rows):
        A[r, nvar + m + a] = 1.0 if viol[r] > 0 else -1.0
    lo = np.concatenate([model.lo, slack_lo, np.zeros(na)])
    hi = np.concatenate([model.hi, slack_hi, np.full(na, INF)])
    x = np.concatenate([x0, s0, np.abs(viol[art_rows])])
    basis = np.arange(nvar, nvar + m)
    for a, r in enumerate(art_rows):
        basis[r] = nvar + m + a
    is_basic = np.zeros(nvar + m + na, dtype=bool)
    is_basic[basis] = True

    st = _State(A, model.rhs.copy(), np.zeros(nvar + m + na), lo, hi, x, basis, is_basic)
    if na:
        st.cost[nvar + m:] = 1.0
        status = _simplex(st)
        infeas = float(st.x[nvar + m:].sum())
        if status != "optimal" or infeas > FEAS_TOL * (1.0 + np.abs(model.rhs).max(initial=0.0)):
            return LpOutcome("infeasible", iterations=st.iterations)
        st.hi[nvar + m:] = 0.0
        st.x[nvar + m:] = np.where(st.is_basic[nvar + m:], st.x[nvar + m:], 0.0)
        st.cost[:] = 0.0
        st.degenerate = 0
    st.cost[:nvar] = sign * model.c
    status = _simplex(st)
    if status == "unbounded":
        return LpOutcome("unbounded", iterations=st.iterations)

    _refactor(st)
    xs = st.x[:nvar].copy()
    y_min = st.cost[st.basis] @ st.Binv
    duals = sign * y_min
    reduced = sign * (st.cost[:nvar] - y_min @ model.A)
    obj = float(model.c @ xs)
    _check_primal(model, xs)
    return LpOutcome("optimal", obj, xs, duals, reduced, st.iterations)


def _check_primal(model: LpModel, x: np.ndarray) -> None:
    tol = FEAS_TOL * (1.0 + np.abs(model.rhs).max(initial=0.0))
    act = model.A @ x
    rel = np.array(model.relations)
    viol = np.zeros_like(act)
    le = rel == LE
    ge = rel == GE
    eq = rel == EQ
    viol[le] = np.maximum(act[le] - model.rhs[le], 0)
    viol[ge] = np.maximum(model.rhs[ge] - act[ge], 0)
    viol[eq] = np.abs(act[eq] - model.rhs[eq])
    worst = max(viol.max(initial=0.0),
                np.max(model.lo - x, initial=0.0),
                np.max(x - model.hi, initial=0.0))
    if worst > 10 * tol:
        raise LpNumericalError(f"primal residual {worst:.3g} exceeds tolerance")


def dual_objective(model: LpModel, out: LpOutcome) -> float:
    """b.y plus the bound contributions of the reduced costs."""
    val = float(model.rhs @ out.duals)
    for j, d in enumerate(out.reduced_costs):
        if d != 0.0:
            val += d * out.x[j]
    return val
