"""Nominal problem plugins.

A plugin knows how to solve its nominal problem for one cost vector, how to
round a fractional point back into the feasible set, how to enumerate the
feasible set at desk scale, and (where it exists) the polyhedron whose vertices
are exactly the feasible solutions. New problems subclass
:class:`NominalProblem` and register in :func:`problem_for`.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterator

import numpy as np

from . import kernels
from .core import Instance
from .lp import EQ, LpBuilder

MAX_ENUMERATION = 10**6
MAX_HELD_KARP = 18
MAX_TSP_ENUMERATION = 8


class UnavailableError(NotImplementedError):
    """The plugin does not provide the requested structure."""


class ScaleError(ValueError):
    """The request exceeds the desk-scale limits of an exhaustive method."""


class NominalProblem:
    n: int

    def solve_nominal(self, c) -> tuple[np.ndarray, float]:
        raise NotImplementedError

    def polyhedron(self):
        raise UnavailableError(f"{type(self).__name__} has no exact LP description")

    def relaxation_rows(self, builder: LpBuilder, xvars: list[int]) -> None:
        """Add the LP relaxation rows of X over the given x columns."""
        raise NotImplementedError

    def round(self, x_frac) -> np.ndarray:
        raise NotImplementedError

    def enumerate_feasible(self) -> Iterator[np.ndarray]:
        raise NotImplementedError

    def feasible_matrix(self) -> np.ndarray:
        return np.array(list(self.enumerate_feasible()), dtype=np.float64)

    def is_feasible(self, x) -> bool:
        raise NotImplementedError


class Selection(NominalProblem):
    """Choose exactly p of n items."""

    def __init__(self, n: int, p: int):
        if not 1 <= p <= n:
            raise ValueError("selection needs 1 <= p <= n")
        self.n = n
        self.p = p

    def solve_nominal(self, c):
        c = np.asarray(c, dtype=np.float64)
        # stable sort keeps the lowest index first among equal costs
        chosen = np.argsort(c, kind="stable")[: self.p]
        x = np.zeros(self.n)
        x[chosen] = 1.0
        return x, float(c @ x)

    def polyhedron(self):
        """Rows (A, relation, b) of {sum x = p} with the box 0 <= x <= 1."""
        return np.ones((1, self.n)), [EQ], np.array([float(self.p)])

    def relaxation_rows(self, builder, xvars):
        builder.row({j: 1.0 for j in xvars}, EQ, self.p)

    def round(self, x_frac):
        x_frac = np.asarray(x_frac, dtype=np.float64)
        chosen = np.argsort(-x_frac, kind="stable")[: self.p]
        x = np.zeros(self.n)
        x[chosen] = 1.0
        return x

    def enumerate_feasible(self):
        count = math.comb(self.n, self.p)
        if count > MAX_ENUMERATION:
            raise ScaleError(f"C({self.n},{self.p}) = {count} solutions is too many")
        for combo in itertools.combinations(range(self.n), self.p):
            x = np.zeros(self.n)
            x[list(combo)] = 1.0
            yield x

    def feasible_matrix(self):
        count = math.comb(self.n, self.p)
        if count > MAX_ENUMERATION:
            raise ScaleError(f"C({self.n},{self.p}) = {count} solutions is too many")
        X = np.zeros((count, self.n))
        for r, combo in enumerate(itertools.combinations(range(self.n), self.p)):
            X[r, list(combo)] = 1.0
        return X

    def is_feasible(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all((x == 0) | (x == 1)) and x.sum() == self.p)


class Tsp(NominalProblem):
    """Asymmetric TSP on m nodes; x[k*m + l] = 1 iff arc k -> l is used."""

    def __init__(self, m: int):
        if m < 3:
            raise ValueError("tsp needs m >= 3")
        self.m = m
        self.n = m * m

    def tour_to_x(self, tour) -> np.ndarray:
        x = np.zeros(self.n)
        for a, b in zip(tour, list(tour[1:]) + [tour[0]]):
            x[a * self.m + b] = 1.0
        return x

    def x_to_tour(self, x) -> list[int]:
        m = self.m
        succ = np.asarray(x).reshape(m, m).argmax(axis=1)
        tour = [0]
        while len(tour) < m:
            tour.append(int(succ[tour[-1]]))
        return tour

    def solve_nominal(self, c):
        if self.m > MAX_HELD_KARP:
            raise ScaleError(f"Held-Karp is limited to m <= {MAX_HELD_KARP}")
        mat = np.ascontiguousarray(np.asarray(c, dtype=np.float64).reshape(self.m, self.m))
        tour, _ = kernels.held_karp(mat)
        x = self.tour_to_x(tour)
        return x, float(np.asarray(c, dtype=np.float64) @ x)

    def solve_tour(self, c) -> tuple[list[int], float]:
        x, v = self.solve_nominal(c)
        return self.x_to_tour(x), v

    def relaxation_rows(self, builder, xvars):
        """Assignment relaxation: out-degree and in-degree one, no subtour cuts."""
        m = self.m
        for k in range(m):
            builder.row({xvars[k * m + l]: 1.0 for l in range(m) if l != k}, EQ, 1)
        for l in range(m):
            builder.row({xvars[k * m + l]: 1.0 for k in range(m) if k != l}, EQ, 1)

    def fixed_zero(self) -> list[int]:
        return [k * self.m + k for k in range(self.m)]

    def round(self, x_frac):
        """Greedy arc selection by decreasing fractional value (lowest index on
        ties), skipping arcs that close a cycle before all nodes are linked."""
        m = self.m
        vals = np.asarray(x_frac, dtype=np.float64).reshape(m, m)
        arcs = sorted(
            ((k, l) for k in range(m) for l in range(m) if k != l),
            key=lambda a: (-vals[a], a[0] * m + a[1]),
        )
        succ = [-1] * m
        pred = [-1] * m
        parent = list(range(m))

        def find(u):
            while parent[u] != u:
                parent[u] = parent[parent[u]]
                u = parent[u]
            return u

        used = 0
        for k, l in arcs:
            if succ[k] >= 0 or pred[l] >= 0:
                continue
            rk, rl = find(k), find(l)
            if rk == rl and used < m - 1:
                continue
            succ[k], pred[l] = l, k
            parent[rk] = rl
            used += 1
            if used == m:
                break
        x = np.zeros(self.n)
        for k in range(m):
            x[k * m + succ[k]] = 1.0
        return x

    def enumerate_feasible(self):
        if self.m > MAX_TSP_ENUMERATION:
            raise ScaleError(f"tour enumeration is limited to m <= {MAX_TSP_ENUMERATION}")
        for perm in itertools.permutations(range(1, self.m)):
            yield self.tour_to_x((0,) + perm)

    def is_feasible(self, x) -> bool:
        m = self.m
        x = np.asarray(x)
        if not np.all((x == 0) | (x == 1)):
            return False
        mat = x.reshape(m, m)
        if np.any(np.diag(mat)) or np.any(mat.sum(0) != 1) or np.any(mat.sum(1) != 1):
            return False
        seen, u = {0}, int(mat[0].argmax())
        while u != 0:
            seen.add(u)
            u = int(mat[u].argmax())
        return len(seen) == m


def problem_for(instance: Instance) -> NominalProblem:
    if instance.kind == "selection":
        return Selection(instance.n, instance.p)
    if instance.kind == "tsp":
        return Tsp(instance.m)
    raise ValueError(f"unknown problem kind {instance.kind!r}")


def selection_solve_nominal(c, p: int):
    return Selection(len(c), p).solve_nominal(c)


def tsp_solve_nominal(c):
    c = np.asarray(c, dtype=np.float64)
    m = c.shape[0] if c.ndim == 2 else math.isqrt(c.size)
    return Tsp(m).solve_tour(c.reshape(-1))


def round_fractional(problem: NominalProblem, x_frac) -> np.ndarray:
    return problem.round(x_frac)


def enumerate_feasible(problem: NominalProblem) -> Iterator[np.ndarray]:
    return problem.enumerate_feasible()
