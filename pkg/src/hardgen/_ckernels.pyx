# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: Held-Karp DP and the robust TSP branch-and-bound.

Arithmetic order mirrors ``_pykernels`` exactly so both back ends agree bit for bit.
"""

import time

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def held_karp(mat):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] c = np.ascontiguousarray(mat, dtype=np.float64)
    cdef Py_ssize_t m = c.shape[0]
    cdef Py_ssize_t k = m - 1
    cdef Py_ssize_t full = (1 << k) - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=2] g = np.zeros((1 << k, max(k, 1)))
    cdef Py_ssize_t mask, j, i, rest, low, cur, pick
    cdef double best, v
    for j in range(k):
        g[0, j] = c[j + 1, 0]
    for mask in range(1, full + 1):
        for j in range(k):
            if (mask >> j) & 1:
                continue
            best = INFINITY
            for i in range(k):
                if (mask >> i) & 1:
                    v = c[j + 1, i + 1] + g[mask ^ (1 << i), i]
                    if v < best:
                        best = v
            g[mask, j] = best
    tour = [0]
    mask = full
    cur = 0
    while mask:
        best = INFINITY
        pick = -1
        for j in range(k):
            if (mask >> j) & 1:
                v = c[cur, j + 1] + g[mask ^ (1 << j), j]
                if v < best:
                    best = v
                    pick = j
        tour.append(pick + 1)
        mask ^= 1 << pick
        cur = pick + 1
    best = INFINITY
    for j in range(k):
        v = c[0, j + 1] + g[full ^ (1 << j), j]
        if v < best:
            best = v
    return tour, (best if k else 0.0)


cdef struct Search:
    double *c          # N*m*m
    double *key        # m*m
    double *prefix     # m*N
    int *path
    int *visited
    int *best_path
    int *order         # m*m scratch for child ordering
    Py_ssize_t N
    Py_ssize_t m
    double best
    int have_best
    long long nodes
    int timed_out
    double deadline


cdef double _now():
    return time.perf_counter()


cdef void _visit(Search *S, Py_ssize_t depth):
    cdef Py_ssize_t N = S.N, m = S.m
    cdef Py_ssize_t u = S.path[depth]
    cdef Py_ssize_t s, v, w, a, b, nfree, tmp
    cdef double value, bound, lb, cheapest, x
    cdef double *pre = S.prefix + depth * N
    cdef double *cs
    cdef int *free_ = S.order + depth * m
    S.nodes += 1
    if (S.nodes & 1023) == 0 and S.deadline >= 0:
        if _now() > S.deadline:
            S.timed_out = 1
    if S.timed_out:
        return
    if depth == m - 1:
        value = -INFINITY
        for s in range(N):
            x = pre[s] + S.c[(s * m + u) * m + 0]
            if x > value:
                value = x
        if value < S.best:
            S.best = value
            S.have_best = 1
            for a in range(m):
                S.best_path[a] = S.path[a]
        return
    nfree = 0
    for v in range(m):
        if not S.visited[v]:
            free_[nfree] = v
            nfree += 1
    bound = -INFINITY
    for s in range(N):
        cs = S.c + s * m * m
        lb = pre[s]
        cheapest = INFINITY
        for a in range(nfree):
            v = free_[a]
            if cs[u * m + v] < cheapest:
                cheapest = cs[u * m + v]
        lb += cheapest
        for a in range(nfree):
            w = free_[a]
            cheapest = cs[w * m + 0]
            for b in range(nfree):
                v = free_[b]
                if v != w and cs[w * m + v] < cheapest:
                    cheapest = cs[w * m + v]
            lb += cheapest
        if lb > bound:
            bound = lb
    if bound >= S.best:
        return
    # insertion sort of free nodes by (key[u][v], v)
    for a in range(1, nfree):
        tmp = free_[a]
        b = a - 1
        while b >= 0 and (S.key[u * m + free_[b]] > S.key[u * m + tmp]
                          or (S.key[u * m + free_[b]] == S.key[u * m + tmp] and free_[b] > tmp)):
            free_[b + 1] = free_[b]
            b -= 1
        free_[b + 1] = tmp
    for a in range(nfree):
        v = free_[a]
        S.visited[v] = 1
        S.path[depth + 1] = v
        for s in range(N):
            S.prefix[(depth + 1) * N + s] = pre[s] + S.c[(s * m + u) * m + v]
        _visit(S, depth + 1)
        S.visited[v] = 0
        if S.timed_out:
            return


def tsp_robust_bnb(costs, order_key, double incumbent=INFINITY, double time_limit=INFINITY):
    cdef cnp.ndarray[cnp.float64_t, ndim=3] C = np.ascontiguousarray(costs, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] K = np.ascontiguousarray(order_key, dtype=np.float64)
    cdef Py_ssize_t N = C.shape[0], m = C.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] prefix = np.zeros(m * N)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] path = np.zeros(m, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] visited = np.zeros(m, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] best_path = np.zeros(m, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] order = np.zeros(m * m, dtype=np.int32)
    cdef Search S
    S.c = <double *> C.data
    S.key = <double *> K.data
    S.prefix = <double *> prefix.data
    S.path = <int *> path.data
    S.visited = <int *> visited.data
    S.best_path = <int *> best_path.data
    S.order = <int *> order.data
    S.N = N
    S.m = m
    S.best = incumbent
    S.have_best = 0
    S.nodes = 0
    S.timed_out = 0
    S.deadline = _now() + time_limit if time_limit != INFINITY else -1.0
    visited[0] = 1
    _visit(&S, 0)
    tour = [int(v) for v in best_path] if S.have_best else None
    return tour, S.best, S.nodes, bool(S.timed_out)
