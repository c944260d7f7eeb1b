import math

import numpy as np
import pytest

from hardgen.core import Instance

TOY_COSTS = [[4, 1, 9, 2], [4, 7, 4, 4]]
TOY_HARDENED = [[3, 2, 10, 1], [5, 6, 3, 5]]


@pytest.fixture
def toy():
    return Instance("selection", np.array(TOY_COSTS, dtype=float), C=100, p=2)


@pytest.fixture
def toy_hardened():
    return Instance("selection", np.array(TOY_HARDENED, dtype=float), C=100, p=2)


def hitting_set_fixture():
    """Hitting-set pool: sets {1,2,3}, {3,4,5}, {6,7} over 7 elements, L=2."""
    from hardgen.core import UncertaintyBox

    X = np.zeros((3, 7))
    X[0, [0, 1, 2]] = 1
    X[1, [2, 3, 4]] = 1
    X[2, [5, 6]] = 1
    c = np.full(7, 1 / 7)
    boxes = [UncertaintyBox(np.zeros(7), np.ones(7), 1.0, seed=c) for _ in range(2)]
    return X, boxes


def random_pool(seed, n_max=8, N_max=3, K_max=3, b=None):
    """Random selection instance, boxes and a pool of distinct feasible solutions."""
    from hardgen.core import build_uncertainty, sample_ru

    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, n_max + 1))
    N = int(rng.integers(1, N_max + 1))
    p = int(rng.integers(1, n + 1))
    inst = sample_ru("selection", n, N, p_or_m=p, seed=seed)
    b = float(rng.integers(1, 6)) if b is None else b
    boxes = build_uncertainty(inst, b)
    K = int(rng.integers(1, K_max + 1))
    rows = {}
    while len(rows) < K:
        x = np.zeros(n)
        x[rng.choice(n, size=p, replace=False)] = 1
        rows.setdefault(x.tobytes(), x)
        if len(rows) == math.comb(n, p):
            break
    return inst, boxes, np.array(list(rows.values()))


# --- acceptance summary ------------------------------------------------------

_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or report.failed:
        num = int(report.nodeid.split("test_criterion_")[1][:2])
        detail = dict(report.user_properties).get("detail", "")
        if report.failed and not detail:
            detail = report.longreprtext.strip().splitlines()[-1] if report.longreprtext else ""
        _CRITERIA[num] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(_CRITERIA):
        status, detail = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num:2d}: {status}  {detail}")
