"""Acceptance criteria 1-11, one test each.

Every test attaches a one-line summary via ``record_property``; conftest prints
a PASS/FAIL line per criterion at the end of the session. Workloads shared
between criteria (monotonicity is checked on the runs of criteria 2-6, and
determinism repeats criterion 9's batch) are cached per session.
"""

import functools
import itertools
import json
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import TOY_COSTS, TOY_HARDENED, random_pool, hitting_set_fixture
from oracles import (mid_oracle, mro_oracle, selection_robust_enum, tour_cost,
                     tsp_robust_enum)
import hardgen.harness as harness
from hardgen.colgen import colgen_master
from hardgen.core import Instance, build_uncertainty, sample_ru
from hardgen.ldr import ldr_solve
from hardgen.midgen import mid_generate
from hardgen.mro import master_solve_alternating, master_solve_exact, mro_generate
from hardgen.problems import selection_solve_nominal, tsp_solve_nominal
from hardgen.robust import robust_solve_exact, sorted_objective_vector

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
TOL = 1e-6


def toy(costs=TOY_COSTS):
    return Instance("selection", np.array(costs, dtype=float), C=100, p=2)


def one_based(x):
    return {int(k) + 1 for k in np.flatnonzero(x)}


# --- shared workloads ----------------------------------------------------------

@functools.lru_cache(maxsize=None)
def criterion2_runs():
    """MRO on the small fixture with b=1, one run per master."""
    inst = toy()
    runs = {}
    for master in ("exact", "alternating", "colgen"):
        hard, run = mro_generate(inst, 1, master, "exact")
        runs[master] = (hard, run)
    return runs


@functools.lru_cache(maxsize=None)
def criterion4_runs():
    """Every generator at b=0 through the batch harness, spying on harden()."""
    seen = []
    real = harness.harden

    def spy(inst, method, b, time_limit):
        out, log = real(inst, method, b, time_limit)
        seen.append((method, inst.costs.copy(), out.costs.copy(), log))
        return out, log

    cfg = {"problem": "selection", "budgets": [0], "count": 5, "seed": 100,
           "methods": ["mro-ex", "mro-heu", "mro-cg", "mro-ldr", "mid"],
           "sizes": [{"n": 6, "N": 3, "p": 3}, {"n": 8, "N": 6, "p": 4},
                     {"n": 10, "N": 4, "p": 5}, {"n": 12, "N": 6, "p": 6}],
           "time_limit": 600}
    harness.harden = spy
    try:
        report = harness.run_batch(cfg)
    finally:
        harness.harden = real
    return report, seen


@functools.lru_cache(maxsize=None)
def criterion5_runs():
    out = []
    for seed in range(50):
        _, boxes, X = random_pool(seed)
        out.append((master_solve_exact(X, boxes), colgen_master(X, boxes),
                    master_solve_alternating(X, boxes)))
    return out


@functools.lru_cache(maxsize=None)
def criterion6_runs():
    out = []
    for seed in range(30):
        rng = np.random.default_rng(1000 + seed)
        n = int(rng.integers(2, 11))
        N = int(rng.integers(1, 5))
        inst = sample_ru("selection", n, N, seed=1000 + seed)
        b = 1 + seed % 2
        history = []
        hard, t = ldr_solve(inst, b, history=history)
        out.append((inst, b, hard, t, history))
    return out


@functools.lru_cache(maxsize=None)
def scaled_batch():
    cfg = json.loads((CONFIGS / "scaled_hardening.json").read_text())
    start = time.perf_counter()
    report = harness.run_batch(cfg)
    return report, time.perf_counter() - start


# --- criteria ------------------------------------------------------------------

def test_criterion_01_fixture_exactness(record_property):
    start = time.perf_counter()
    r = robust_solve_exact(toy())
    assert r.value == 8 and one_based(r.x) == {1, 4}
    assert sorted_objective_vector(toy()).tolist() == [8, 11, 11, 11, 11, 13]
    h = robust_solve_exact(toy(TOY_HARDENED))
    assert h.value == 10 and one_based(h.x) == {1, 4}
    assert sorted_objective_vector(toy(TOY_HARDENED)).tolist() == [10, 11, 11, 11, 12, 13]
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0
    record_property("detail", f"values 8 and 10 on {{1,4}}, {elapsed:.3f}s")


def test_criterion_02_mro_dominance(record_property):
    start = time.perf_counter()
    hard, run = criterion2_runs()["exact"]
    value = robust_solve_exact(hard).value
    oracle = mro_oracle(toy(), 1)
    elapsed = time.perf_counter() - start
    assert value >= 10 - TOL
    assert value == pytest.approx(oracle, abs=TOL)
    assert run.stop_reason == "converged"
    assert elapsed < 10.0
    record_property("detail", f"hardened optimum {value:g}, oracle {oracle:g}, {elapsed:.2f}s")


def test_criterion_03_hitting_set_fixture(record_property):
    start = time.perf_counter()
    X, boxes = hitting_set_fixture()
    ms = master_solve_exact(X, boxes)
    elapsed = time.perf_counter() - start
    assert ms.objective == pytest.approx(1.0, abs=TOL)
    assert np.allclose(ms.scenarios, np.round(ms.scenarios), atol=TOL)
    covered = (X @ np.round(ms.scenarios).T).max(axis=1)
    assert np.all(covered >= 1)
    assert elapsed < 5.0
    record_property("detail", f"objective {ms.objective:.6f}, all 3 sets covered, {elapsed:.2f}s")


def test_criterion_04_zero_budget_identity(record_property):
    report, seen = criterion4_runs()
    assert len(seen) == 100  # 20 instances x 5 generators
    for method, before, after, _ in seen:
        assert np.abs(after - before).max() <= 1e-9, method
    assert all(r["error"] is None for r in report["records"])
    assert all(r["node_ratio"] == 1.0 for r in report["records"])
    assert all(r["value_after"] == r["value_before"] for r in report["records"])
    for a in report["aggregates"]:
        assert a["mean_node_ratio"] == a["max_node_ratio"] == 1.0
    record_property("detail", "100 runs unchanged, every node ratio 1")


def test_criterion_05_relaxation_ordering(record_property):
    runs = criterion5_runs()
    gap = []
    for exact, cg, alt in runs:
        assert cg.objective >= exact.objective - TOL
        assert alt.objective <= exact.objective + TOL
        gap.append(cg.objective - exact.objective)
    record_property("detail", f"50 pools, max relaxation gap {max(gap):.3g}")


def test_criterion_06_ldr_soundness(record_property):
    slack = []
    for inst, b, hard, t, _ in criterion6_runs():
        value = robust_solve_exact(hard).value
        assert t <= value + TOL
        for box, c in zip(build_uncertainty(inst, b), hard.costs):
            assert box.contains(c, tol=1e-6)
        slack.append(value - t)
    record_property("detail", f"30 instances, min slack {min(slack):.3g}")


def test_criterion_07_oracle_equivalence(record_property):
    rng = np.random.default_rng(7)
    for seed in range(100):
        n = int(rng.integers(2, 14))
        N = int(rng.integers(1, 7))
        p = int(rng.integers(1, n + 1))
        inst = sample_ru("selection", n, N, p_or_m=p, seed=2000 + seed)
        assert robust_solve_exact(inst).value == selection_robust_enum(inst.costs, p)
    for seed in range(50):
        m = 3 + seed % 5
        N = 1 + seed % 4
        inst = sample_ru("tsp", m * m, N, p_or_m=m, seed=3000 + seed)
        assert robust_solve_exact(inst).value == tsp_robust_enum(inst.costs.reshape(N, m, m))
    for seed in range(24):
        m = 3 + seed % 6
        mat = sample_ru("tsp", m * m, 1, p_or_m=m, seed=4000 + seed).costs.reshape(m, m)
        tour, v = tsp_solve_nominal(mat)
        best = min(tour_cost(mat, [0, *p]) for p in itertools.permutations(range(1, m)))
        assert v == best == tour_cost(mat, tour)
    record_property("detail", "100 selection, 50 robust tsp, 24 nominal tsp matched")


def test_criterion_08_monotonicity(record_property):
    checked = 0
    for hard, run in criterion2_runs().values():
        ups = [it.upper for it in run.iterations]
        assert all(b <= a + 1e-9 for a, b in zip(ups, ups[1:]))
        assert all(it.lower <= it.upper + TOL for it in run.iterations)
        checked += 1
    for _, _, _, log in criterion4_runs()[1]:
        mv = log.get("master_values")
        if mv is not None:
            # b=0 leaves nothing to improve: one master round
            assert len(mv) == 1
            checked += 1
    for _, cg, alt in criterion5_runs():
        h = alt.history
        assert all(b >= a - 1e-9 for a, b in zip(h, h[1:]))
        h = cg.history
        assert all(b >= a - 1e-7 * (1 + abs(a)) for a, b in zip(h, h[1:]))
        checked += 2
    for *_, history in criterion6_runs():
        assert all(b >= a - 1e-7 * (1 + abs(a)) for a, b in zip(history, history[1:]))
        checked += 1
    record_property("detail", f"{checked} run histories monotone")


def test_criterion_09_scaled_hardening(record_property):
    report, elapsed = scaled_batch()
    recs = report["records"]
    assert len(recs) == 30 and all(r["error"] is None for r in recs)
    solved = [r for r in recs if r["node_ratio"] is not None]
    assert len(solved) == 30
    mean_ratio = float(np.mean([r["node_ratio"] for r in solved]))
    larger = sum(r["value_after"] > r["value_before"] for r in solved) / len(solved)
    record_property("detail", f"mean node ratio {mean_ratio:.2f}, larger optimum on "
                              f"{100 * larger:.0f}%, {elapsed:.0f}s")
    assert mean_ratio >= 1.5
    assert larger >= 0.8
    assert elapsed < 15 * 60


def test_criterion_10_determinism(record_property):
    first, _ = scaled_batch()
    cfg = json.loads((CONFIGS / "scaled_hardening.json").read_text())
    again = harness.run_batch(cfg)
    a = harness.dumps_report(first, timings=False)
    b = harness.dumps_report(again, timings=False)
    assert a == b
    record_property("detail", f"reports identical ({len(a)} bytes without wall times)")


def test_criterion_11_midpoint_consistency(record_property):
    compared = 0
    for seed in range(20):
        rng = np.random.default_rng(5000 + seed)
        n = int(rng.integers(2, 11))
        N = int(rng.integers(1, 5))
        b = seed % 2
        inst = sample_ru("selection", n, N, seed=5000 + seed)
        out, value, x = mid_generate(inst, b)
        mid = out.costs.mean(axis=0)
        _, best = selection_solve_nominal(mid, inst.p)
        assert mid @ x == pytest.approx(best, abs=TOL)
        assert value == pytest.approx((out.costs @ x).max(), abs=1e-9)
        if b == 1:
            assert value == pytest.approx(mid_oracle(inst, 1), abs=TOL)
            compared += 1
    record_property("detail", f"20 midpoint optima verified, {compared} oracle matches")
