"""Compare the compiled kernels with the pure-Python reference.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Both back ends must return identical tours, values and node counts; the script
exits nonzero otherwise.
"""

import argparse
import sys
import time

from hardgen import _pykernels, kernels
from hardgen.core import sample_ru

try:
    from hardgen import _ckernels
except ImportError:
    _ckernels = None


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _ckernels is None:
        print("compiled extension not built; only the reference is available")
        return 1
    cases = []
    for m in (10, 12, 13):
        inst = sample_ru("tsp", m * m, 1, p_or_m=m, seed=m)
        mat = inst.costs.reshape(m, m)
        cases.append((f"held_karp m={m}", lambda mat=mat, impl=None: kernels.held_karp(mat, impl)))
    for m, N in ((9, 3), (10, 4), (11, 4)):
        inst = sample_ru("tsp", m * m, N, p_or_m=m, seed=100 + m)
        C = inst.costs.reshape(N, m, m)
        cases.append((f"tsp_robust_bnb m={m} N={N}",
                      lambda C=C, impl=None: kernels.tsp_robust_bnb(C, impl=impl)))
    print(f"{'kernel':<26}{'python s':>10}{'cython s':>10}{'speedup':>9}")
    ok = True
    for name, fn in cases:
        tp, rp = _best_of(lambda: fn(impl=_pykernels), 1)
        tc, rc = _best_of(lambda: fn(impl=_ckernels), args.repeat)
        same = list(rp[0]) == list(rc[0]) and rp[1:] == rc[1:]
        ok &= same
        print(f"{name:<26}{tp:>10.3f}{tc:>10.4f}{tp / tc:>8.0f}x{'' if same else '  MISMATCH'}")
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
