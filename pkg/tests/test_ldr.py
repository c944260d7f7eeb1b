import numpy as np
import pytest

from oracles import max_min_oracle
from hardgen.core import Instance, build_uncertainty, sample_ru
from hardgen.ldr import UnsupportedProblemError, ldr_build, ldr_solve
from hardgen.mro import mro_generate
from hardgen.robust import robust_solve_exact


def test_row_count_audit():
    inst = Instance("selection", [[3.0, 5.0]], C=10, p=1)
    tpl = ldr_build(inst)
    n, N = 2, 1
    assert tpl.row_counts == {"cost_x": n, "cost_y": n * n, "rule_sum": 1, "rule_sum_dual": n,
                              "rule_nonneg": N, "rule_nonneg_dual": n * N, "box_sum": N}
    assert len(tpl.builder_rows) == sum(tpl.row_counts.values())
    # every lam-c product sits in a cost row
    assert len(tpl.bilinear) == N * n + N * n * n


def test_toy_structure(toy):
    tpl = ldr_build(toy, build_uncertainty(toy, 1))
    n, N = 4, 2
    assert tpl.row_counts["cost_y"] == n * n and tpl.row_counts["rule_nonneg_dual"] == N * n
    assert tpl.index["lam"].shape == (N, n) and tpl.index["c"].shape == (N, n)
    m = tpl.model(c=toy.costs)
    # the fixed cost block is pinned
    cols = tpl.index["c"].ravel()
    assert np.array_equal(m.lo[cols], toy.costs.ravel()) and np.array_equal(m.hi[cols], m.lo[cols])
    with pytest.raises(ValueError):
        tpl.model()


def test_tsp_refused():
    with pytest.raises(UnsupportedProblemError):
        ldr_build(sample_ru("tsp", 16, 2, p_or_m=4, seed=0))


@pytest.mark.parametrize("seed", range(5))
def test_zero_budget(seed):
    inst = sample_ru("selection", 6, 3, seed=seed)
    out, t = ldr_solve(inst, 0)
    assert np.array_equal(out.costs, inst.costs)
    assert t <= robust_solve_exact(inst).value + 1e-6


@pytest.mark.parametrize("seed", range(8))
def test_single_scenario_is_exact(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 8))
    inst = sample_ru("selection", n, 1, p_or_m=int(rng.integers(1, n + 1)), seed=seed)
    b = float(rng.integers(0, 6))
    out, t = ldr_solve(inst, b)
    assert t == pytest.approx(max_min_oracle(inst, b), abs=1e-6)
    assert robust_solve_exact(out).value >= t - 1e-6


def test_toy_below_mro(toy):
    history = []
    out, t = ldr_solve(toy, 1, history=history)
    hard, _ = mro_generate(toy, 1, "exact", "exact")
    assert t <= robust_solve_exact(hard).value + 1e-6
    assert t <= robust_solve_exact(out).value + 1e-6
    assert all(b >= a - 1e-7 for a, b in zip(history, history[1:]))


@pytest.mark.parametrize("seed", range(30))
def test_soundness_and_monotonicity(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 11))
    N = int(rng.integers(1, 5))
    inst = sample_ru("selection", n, N, seed=seed)
    b = 1 + seed % 2
    history = []
    out, t = ldr_solve(inst, b, history=history)
    assert t <= robust_solve_exact(out).value + 1e-6
    assert all(b2 >= a - 1e-7 * (1 + abs(a)) for a, b2 in zip(history, history[1:]))
    assert all(box.contains(c, tol=1e-6) for box, c in zip(build_uncertainty(inst, b), out.costs))
