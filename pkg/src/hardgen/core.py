"""Instance data model, uncertainty boxes, seeded RNG and HIRO-text I/O."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

KINDS = ("selection", "tsp")


class InstanceError(ValueError):
    """An instance or box violates its invariants."""


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Instance:
    """A min-max robust problem: nominal problem kind plus N scenario cost vectors.

    ``costs`` has shape (N, n). For tsp, ``n == m * m`` and entry ``k*m + l`` is
    the cost of arc k -> l.
    """

    kind: str
    costs: np.ndarray
    C: float = 100.0
    p: int | None = None
    m: int | None = None

    def __post_init__(self):
        costs = np.array(self.costs, dtype=np.float64)
        if costs.ndim != 2:
            raise InstanceError("costs must be an N x n matrix")
        costs.setflags(write=False)
        object.__setattr__(self, "costs", costs)
        self.validate()

    @property
    def N(self) -> int:
        return self.costs.shape[0]

    @property
    def n(self) -> int:
        return self.costs.shape[1]

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise InstanceError(f"unknown problem kind {self.kind!r}")
        N, n = self.costs.shape
        if n < 1 or N < 1:
            raise InstanceError("need n >= 1 and N >= 1")
        if not np.all(np.isfinite(self.costs)):
            raise InstanceError("costs must be finite")
        if self.costs.min() < 0 or self.costs.max() > self.C:
            raise InstanceError(f"costs must lie in [0, C={self.C:g}]")
        if self.kind == "selection":
            if self.p is None or not 1 <= self.p <= n:
                raise InstanceError("selection needs 1 <= p <= n")
        else:
            m = self.m
            if m is None or m < 3 or m * m != n:
                raise InstanceError("tsp needs m >= 3 and n == m*m")
            diag = self.costs[:, [k * m + k for k in range(m)]]
            if np.any(diag != 0):
                raise InstanceError("tsp diagonal costs must be 0")

    def with_costs(self, costs) -> "Instance":
        return Instance(self.kind, costs, C=self.C, p=self.p, m=self.m)

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.C == other.C
            and self.p == other.p
            and self.m == other.m
            and self.costs.shape == other.costs.shape
            and bool(np.array_equal(self.costs, other.costs))
        )

    __hash__ = None


@dataclass(frozen=True)
class UncertaintyBox:
    """Scenario box: lower <= c <= upper with sum(c) == target_sum.

    ``seed`` is the original scenario the box was built around, when known.
    """

    lower: np.ndarray
    upper: np.ndarray
    target_sum: float
    seed: np.ndarray | None = None

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=np.float64)
        hi = np.asarray(self.upper, dtype=np.float64)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if lo.shape != hi.shape or np.any(lo < 0) or np.any(lo > hi):
            raise InstanceError("box needs 0 <= lower <= upper")
        tol = 1e-9 * (1.0 + abs(self.target_sum))
        if not lo.sum() - tol <= self.target_sum <= hi.sum() + tol:
            raise InstanceError(
                f"empty box: target sum {self.target_sum:g} outside "
                f"[{lo.sum():g}, {hi.sum():g}]"
            )

    def contains(self, c, tol: float = 1e-7) -> bool:
        c = np.asarray(c, dtype=np.float64)
        return bool(
            np.all(c >= self.lower - tol)
            and np.all(c <= self.upper + tol)
            and abs(c.sum() - self.target_sum) <= tol * (1.0 + abs(self.target_sum))
        )

    def max_dot(self, w) -> float:
        """max w.c over the box (greedy fill of the largest weights)."""
        return float(np.dot(w, greedy_fill(self, w)))


def greedy_fill(box: UncertaintyBox, w) -> np.ndarray:
    """Maximizer of w.c over the box: start at lower, push the free mass onto the
    largest weights first (lowest index on ties)."""
    w = np.asarray(w, dtype=np.float64)
    c = box.lower.copy()
    free = box.target_sum - c.sum()
    for k in sorted(range(len(w)), key=lambda k: (-w[k], k)):
        if free <= 0:
            break
        step = min(box.upper[k] - c[k], free)
        c[k] += step
        free -= step
    return c


def build_uncertainty(instance: Instance, b: float) -> list[UncertaintyBox]:
    """One box per scenario with bounds max(c-b, 0) .. min(c+b, C) and fixed sum."""
    if b < 0:
        raise InstanceError("budget must be >= 0")
    boxes = []
    fixed = _fixed_coordinates(instance)
    for c in instance.costs:
        lo = np.maximum(c - b, 0.0)
        hi = np.minimum(c + b, instance.C)
        lo[fixed] = c[fixed]
        hi[fixed] = c[fixed]
        boxes.append(UncertaintyBox(lo, hi, float(c.sum()), seed=c.copy()))
    return boxes


def _fixed_coordinates(instance: Instance) -> list[int]:
    if instance.kind == "tsp":
        m = instance.m
        return [k * m + k for k in range(m)]
    return []


# --- RNG -------------------------------------------------------------------

_MASK = (1 << 64) - 1


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)


class Rng:
    """xoshiro256** seeded through SplitMix64; identical seeds give identical
    streams on every platform."""

    def __init__(self, seed: int):
        sm = SplitMix64(seed)
        self.s = [sm.next() for _ in range(4)]

    def next_u64(self) -> int:
        s = self.s
        result = (_rotl((s[1] * 5) & _MASK, 7) * 9) & _MASK
        t = (s[1] << 17) & _MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def integers(self, low: int, high: int) -> int:
        """Uniform integer in [low, high] by rejection (no modulo bias)."""
        span = high - low + 1
        if span <= 0:
            raise ValueError("empty range")
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            r = self.next_u64()
            if r < limit:
                return low + r % span

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


def sample_ru(
    kind: str,
    n: int,
    N: int,
    C: float = 100,
    p_or_m: int | None = None,
    seed: int = 0,
    symmetric: bool = False,
) -> Instance:
    """RU baseline: i.i.d. uniform integer costs in {0..C}.

    For selection ``n`` is the item count and ``p_or_m`` is p (default n//2).
    For tsp ``p_or_m`` is the node count m and ``n`` must be m*m (or None).
    """
    rng = Rng(seed)
    cmax = int(C)
    if cmax != C or cmax < 0:
        raise InstanceError("RU sampling needs a nonnegative integer C")
    if kind == "selection":
        p = p_or_m if p_or_m is not None else max(1, n // 2)
        costs = [[rng.integers(0, cmax) for _ in range(n)] for _ in range(N)]
        return Instance("selection", np.array(costs, dtype=np.float64), C=C, p=p)
    if kind == "tsp":
        m = p_or_m if p_or_m is not None else math.isqrt(n)
        if n is not None and n != m * m:
            raise InstanceError("tsp needs n == m*m")
        costs = np.zeros((N, m * m))
        for i in range(N):
            for k in range(m):
                for l in range(m):
                    if k == l or (symmetric and l < k):
                        continue
                    costs[i, k * m + l] = rng.integers(0, cmax)
                    if symmetric:
                        costs[i, l * m + k] = costs[i, k * m + l]
        return Instance("tsp", costs, C=C, m=m)
    raise InstanceError(f"unknown problem kind {kind!r}")


# --- HIRO-text format ---------------------------------------------------------


def format_number(v: float) -> str:
    s = format(v, ".9g")
    if float(s) != v:
        s = repr(float(v))
    return s


def dumps_instance(instance: Instance) -> str:
    lines = [
        "HIRO 1",
        f"problem {instance.kind}",
        f"n {instance.n}",
        f"N {instance.N}",
        f"C {format_number(instance.C)}",
    ]
    if instance.kind == "selection":
        lines.append(f"p {instance.p}")
    else:
        lines.append(f"m {instance.m}")
    lines.append("costs")
    for row in instance.costs:
        lines.append(" ".join(format_number(v) for v in row))
    return "\n".join(lines) + "\n"


def write_instance(instance: Instance, path) -> None:
    Path(path).write_text(dumps_instance(instance))


def _tokens(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        col = 0
        for tok in line.split():
            col = line.index(tok, col)
            yield tok, lineno, col + 1
            col += len(tok)


def loads_instance(text: str) -> Instance:
    toks = list(_tokens(text))
    pos = 0

    def take(what: str):
        nonlocal pos
        if pos >= len(toks):
            last = toks[-1][1] if toks else 1
            raise ParseError(f"unexpected end of file, expected {what}", last)
        tok = toks[pos]
        pos += 1
        return tok

    def expect_word(word: str):
        tok, line, col = take(repr(word))
        if tok != word:
            raise ParseError(f"expected {word!r}, got {tok!r}", line, col)

    def take_int(what: str) -> int:
        tok, line, col = take(what)
        try:
            return int(tok)
        except ValueError:
            raise ParseError(f"expected integer {what}, got {tok!r}", line, col) from None

    def take_float(what: str) -> float:
        tok, line, col = take(what)
        try:
            v = float(tok)
        except ValueError:
            raise ParseError(f"expected number {what}, got {tok!r}", line, col) from None
        if not math.isfinite(v):
            raise ParseError(f"non-finite {what}", line, col)
        return v

    expect_word("HIRO")
    tok, line, col = take("format version")
    if tok != "1":
        raise ParseError(f"unsupported format version {tok!r}", line, col)
    expect_word("problem")
    kind, line, col = take("problem kind")
    if kind not in KINDS:
        raise ParseError(f"unknown problem kind {kind!r}", line, col)
    expect_word("n")
    n = take_int("n")
    expect_word("N")
    N = take_int("N")
    expect_word("C")
    C = take_float("C")
    p = m = None
    if kind == "selection":
        expect_word("p")
        p = take_int("p")
    else:
        expect_word("m")
        m = take_int("m")
    expect_word("costs")
    if n < 1 or N < 1:
        raise ParseError("n and N must be positive", toks[pos - 1][1])
    values = [take_float("cost") for _ in range(n * N)] if pos + n * N <= len(toks) else None
    if values is None or pos != len(toks):
        have = len(toks) - pos if values is None else n * N + len(toks) - pos
        line = toks[-1][1]
        raise ParseError(f"expected {n * N} cost values (N={N} x n={n}), found {have}", line)
    return Instance(kind, np.array(values).reshape(N, n), C=C, p=p, m=m)


def read_instance(path) -> Instance:
    return loads_instance(Path(path).read_text())
