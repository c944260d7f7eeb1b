"""Pure-Python reference versions of the compiled kernels in ``_ckernels.pyx``.

Both implementations perform the same floating point operations in the same
order, so tours, values and node counts agree bit for bit.
"""

from __future__ import annotations

import time

import numpy as np


def held_karp(mat):
    """Optimal directed tour from node 0; ties go to the lexicographically
    smallest successor sequence."""
    c = np.asarray(mat, dtype=np.float64).tolist()
    m = len(c)
    k = m - 1
    full = (1 << k) - 1
    # g[mask][j]: cheapest path from node j+1 through all nodes of mask, back to 0
    g = [[0.0] * k for _ in range(1 << k)]
    for j in range(k):
        g[0][j] = c[j + 1][0]
    for mask in range(1, full + 1):
        row = g[mask]
        for j in range(k):
            if mask >> j & 1:
                continue
            best = float("inf")
            cj = c[j + 1]
            rest = mask
            while rest:
                low = rest & -rest
                i = low.bit_length() - 1
                rest ^= low
                v = cj[i + 1] + g[mask ^ low][i]
                if v < best:
                    best = v
            row[j] = best
    tour = [0]
    mask = full
    cur = 0
    while mask:
        best = float("inf")
        pick = -1
        for j in range(k):
            if mask >> j & 1:
                v = c[cur][j + 1] + g[mask ^ (1 << j)][j]
                if v < best:
                    best, pick = v, j
        tour.append(pick + 1)
        mask ^= 1 << pick
        cur = pick + 1
    value = min(c[0][j + 1] + g[full ^ (1 << j)][j] for j in range(k)) if k else 0.0
    return tour, value


def tsp_robust_bnb(costs, order_key, incumbent=float("inf"), time_limit=float("inf")):
    """Depth-first branch-and-bound for min over tours of the max scenario cost.

    ``costs`` has shape (N, m, m). Branching extends the path from node 0 by one
    successor, trying successors by increasing ``order_key[u][v]``; the bound adds, per scenario, the cheapest admissible outgoing
    arc of every node that still has to leave. Returns (tour or None, value,
    nodes, timed_out).
    """
    C = np.asarray(costs, dtype=np.float64)
    N, m, _ = C.shape
    c = C.tolist()
    order_key = np.asarray(order_key, dtype=np.float64).tolist()
    path = [0]
    visited = [False] * m
    visited[0] = True
    # prefix[d][s]: scenario-s cost of the path's first d arcs
    prefix = [[0.0] * N for _ in range(m)]
    best = [incumbent, None]
    nodes = 0
    start = time.perf_counter()
    timed_out = False

    def visit():
        nonlocal nodes, timed_out
        nodes += 1
        if (nodes & 1023) == 0 and time.perf_counter() - start > time_limit:
            timed_out = True
        if timed_out:
            return
        u = path[-1]
        depth = len(path) - 1
        pre = prefix[depth]
        if depth == m - 1:
            value = max(pre[s] + c[s][u][0] for s in range(N))
            if value < best[0]:
                best[0] = value
                best[1] = list(path)
            return
        free = [v for v in range(m) if not visited[v]]
        bound = -float("inf")
        for s in range(N):
            cs = c[s]
            lb = pre[s]
            row = cs[u]
            lb += min(row[v] for v in free)
            for w in free:
                roww = cs[w]
                cheapest = roww[0]
                for v in free:
                    if v != w and roww[v] < cheapest:
                        cheapest = roww[v]
                lb += cheapest
            if lb > bound:
                bound = lb
        if bound >= best[0]:
            return
        key = order_key[u]
        for v in sorted(free, key=lambda v: (key[v], v)):
            visited[v] = True
            path.append(v)
            nxt = prefix[depth + 1]
            for s in range(N):
                nxt[s] = pre[s] + c[s][u][v]
            visit()
            path.pop()
            visited[v] = False
            if timed_out:
                return

    visit()
    return best[1], best[0], nodes, timed_out
