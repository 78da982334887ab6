"""Exact trace moments ``E Tr X^{2p}`` by cycle enumeration.

Two independent routes are provided:

* :func:`direct_trace_moment` sums the weight of every closed index
  sequence ``(i_1, ..., i_2p)``;
* :func:`shape_trace_moment` groups sequences by their canonical shape
  (vertices relabeled in order of first appearance) and multiplies each
  shape weight by its number of injective embeddings in a graph.

All arithmetic is exact: floats are converted with ``Fraction(x)``, which
is the exact binary value, so dyadic patterns give exact rationals.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BudgetError, ModelError
from .model import (CoefficientEnsemble, SparsityGraph, VariancePattern,
                    pattern_from_coefficients)

__all__ = [
    "GAUSSIAN", "RADEMACHER", "ShapeStats", "MomentResult", "law_moment", "gaussian_moment",
    "cycle_weight", "direct_trace_moment", "enumerate_even_shapes", "count_embeddings",
    "falling_factorial", "shape_trace_moment", "wick_trace_moment", "compression_check",
    "nck_moment_check", "subgaussian_comparison_check", "shape_rows",
]

GAUSSIAN = "gaussian"
RADEMACHER = "rademacher"
LAWS = (GAUSSIAN, RADEMACHER)
STEP_BUDGET = 10 ** 8
MAX_SHAPE_P = 5
_CHUNK = 1 << 16


@dataclass(frozen=True)
class ShapeStats:
    sequence: tuple
    edge_counts: tuple      # ((u, v), multiplicity) with u <= v, 1-based labels
    distinct_vertices: int

    @property
    def distinct_edges(self) -> int:
        return len(self.edge_counts)

    @property
    def m_ell(self) -> dict:
        out = {}
        for _, ell in self.edge_counts:
            out[ell] = out.get(ell, 0) + 1
        return dict(sorted(out.items()))

    def weight(self, law: str = GAUSSIAN) -> int:
        return math.prod(law_moment(ell, law) ** m for ell, m in self.m_ell.items())


@dataclass(frozen=True)
class MomentResult:
    value: Fraction
    p: int
    method: str
    entry_law: str

    def to_dict(self) -> dict:
        return {"value": str(self.value), "value_float": float(self.value), "p": self.p,
                "method": self.method, "entry_law": self.entry_law}


def _check_law(law: str):
    if law not in LAWS:
        raise ModelError(f"unknown entry law {law!r}; expected one of {LAWS}")


def gaussian_moment(two_p: int) -> int:
    """``E g^{2p}`` for standard Gaussian g, via ``E g^{2p} = (2p - 1) E g^{2p-2}``."""
    if isinstance(two_p, bool) or not isinstance(two_p, int) or two_p < 2 or two_p % 2 or two_p > 40:
        raise ModelError(f"two_p must be an even integer in [2, 40], got {two_p!r}")
    m = 1
    for k in range(2, two_p + 1, 2):
        m *= k - 1
    return m


def law_moment(ell: int, law: str = GAUSSIAN) -> int:
    """``E xi^ell`` for a standard Gaussian or Rademacher variable."""
    _check_law(law)
    if ell % 2:
        return 0
    if ell == 0:
        return 1
    return gaussian_moment(ell) if law == GAUSSIAN else 1


def _exact_matrix(b) -> list:
    arr = b.b if isinstance(b, VariancePattern) else b
    return [[Fraction(x) if not isinstance(x, Fraction) else x for x in row] for row in
            (arr.tolist() if isinstance(arr, np.ndarray) else arr)]


def cycle_weight(cycle, b, law: str = GAUSSIAN) -> Fraction:
    """``E prod_t X_{i_t i_{t+1}}`` for one closed index sequence (indices 0-based)."""
    _check_law(law)
    bx = _exact_matrix(b)
    counts = {}
    L = len(cycle)
    for t in range(L):
        i, j = cycle[t], cycle[(t + 1) % L]
        e = (min(i, j), max(i, j))
        counts[e] = counts.get(e, 0) + 1
    w = Fraction(1)
    for (i, j), ell in counts.items():
        mu = law_moment(ell, law)
        if mu == 0:
            return Fraction(0)
        w *= bx[i][j] ** ell * mu
    return w


def _direct_from_variances(var, p: int, law: str, budget: int) -> Fraction:
    # var: exact entry variances; edge of multiplicity ell contributes var^(ell/2) * mu_ell
    n = len(var)
    L = 2 * p
    total = n ** L
    if total > budget:
        raise BudgetError(f"direct enumeration needs {n}^{L} = {total} steps (budget {budget})")
    powers = n ** np.arange(L - 1, -1, -1, dtype=np.int64)
    profiles = {}
    for start in range(0, total, _CHUNK):
        ids = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        idx = (ids[:, None] // powers[None, :]) % n
        nxt = np.roll(idx, -1, axis=1)
        edge = np.minimum(idx, nxt) * n + np.maximum(idx, nxt)
        counts = np.zeros((ids.size, n * n), dtype=np.int16)
        rows = np.arange(ids.size)
        for t in range(L):
            counts[rows, edge[:, t]] += 1
        # any odd multiplicity has zero expectation under both laws
        even = ~np.any(counts % 2, axis=1)
        uniq, mult = np.unique(counts[even], axis=0, return_counts=True)
        for prof, m in zip(uniq, mult):
            key = prof.tobytes()
            profiles[key] = profiles.get(key, 0) + int(m)
    value = Fraction(0)
    for key, m in profiles.items():
        prof = np.frombuffer(key, dtype=np.int16)
        w = Fraction(m)
        for e in np.flatnonzero(prof):
            ell = int(prof[e])
            v = var[e // n][e % n]
            if v == 0:
                w = Fraction(0)
                break
            w *= v ** (ell // 2) * law_moment(ell, law)
        value += w
    return value


def direct_trace_moment(vp, p: int, law: str = GAUSSIAN, budget: int = STEP_BUDGET) -> MomentResult:
    """``E Tr X^{2p}`` summed over all ``n^{2p}`` closed index sequences.

    ``vp`` is a :class:`VariancePattern` or a square nested sequence of
    rationals/floats giving the entry standard deviations.
    """
    _check_law(law)
    if p < 1:
        raise ModelError("p must be a positive integer")
    bx = _exact_matrix(vp)
    var = [[x * x for x in row] for row in bx]
    return MomentResult(_direct_from_variances(var, p, law, budget), p, "direct_enumeration", law)


# -- shapes ----------------------------------------------------------------------

def _restricted_growth(length: int):
    seq = [1]

    def rec(cur_max):
        if len(seq) == length:
            yield tuple(seq)
            return
        for v in range(1, cur_max + 2):
            seq.append(v)
            yield from rec(max(cur_max, v))
            seq.pop()

    yield from rec(1)


def _shape_of(seq) -> ShapeStats | None:
    counts = {}
    L = len(seq)
    for t in range(L):
        u, v = seq[t], seq[(t + 1) % L]
        e = (min(u, v), max(u, v))
        counts[e] = counts.get(e, 0) + 1
    if any(c % 2 for c in counts.values()):
        return None
    return ShapeStats(tuple(seq), tuple(sorted(counts.items())), max(seq))


def enumerate_even_shapes(p: int, allow_loops: bool = False) -> list:
    """All canonical shapes of even closed walks of length ``2p``."""
    if p < 1:
        raise ModelError("p must be a positive integer")
    if p > MAX_SHAPE_P:
        raise BudgetError(f"shape enumeration limited to p <= {MAX_SHAPE_P}")
    out = []
    for seq in _restricted_growth(2 * p):
        if not allow_loops and any(seq[t] == seq[(t + 1) % len(seq)] for t in range(len(seq))):
            continue
        s = _shape_of(seq)
        if s is not None:
            out.append(s)
    return out


def count_embeddings(shape: ShapeStats, g: SparsityGraph) -> int:
    """Number of injective vertex maps sending every shape edge onto an edge of ``g``."""
    m = shape.distinct_vertices
    # edges to check when vertex v is assigned: those to already-assigned labels (and loops)
    back = [[] for _ in range(m + 1)]
    for (u, v), _ in shape.edge_counts:
        back[max(u, v)].append(min(u, v))
    assign = [0] * (m + 1)
    used = [False] * g.n

    def rec(v):
        if v > m:
            return 1
        total = 0
        for x in range(g.n):
            if used[x]:
                continue
            if all(g.has_edge(x, x if u == v else assign[u]) for u in back[v]):
                assign[v] = x
                used[x] = True
                total += rec(v + 1)
                used[x] = False
        return total

    return rec(1)


def falling_factorial(r: int, m: int) -> int:
    return math.prod(range(r - m + 1, r + 1)) if m <= r else 0


def shape_trace_moment(g: SparsityGraph, p: int, law: str = GAUSSIAN) -> MomentResult:
    """``E Tr X^{2p}`` for the sparse Wigner matrix of ``g`` as ``sum_s c(s) #emb(s, g)``."""
    _check_law(law)
    total = 0
    for s in enumerate_even_shapes(p, g.allow_loops):
        w = s.weight(law)
        if w:
            total += w * count_embeddings(s, g)
    return MomentResult(Fraction(total), p, "shape_formula", law)


def _complete_moment(r: int, p: int, law: str = GAUSSIAN) -> int:
    # r x r Wigner (complete graph with loops): every injective assignment embeds
    return sum(s.weight(law) * falling_factorial(r, s.distinct_vertices)
               for s in enumerate_even_shapes(p, allow_loops=True))


@dataclass(frozen=True)
class InequalityCheck:
    lhs: Fraction
    rhs: Fraction
    holds: bool

    def to_dict(self) -> dict:
        return {"lhs": str(self.lhs), "rhs": str(self.rhs), "lhs_float": float(self.lhs),
                "rhs_float": float(self.rhs), "holds": self.holds}


def compression_check(g: SparsityGraph, p: int) -> InequalityCheck:
    """Compare ``E Tr X_G^{2p}`` with ``n/(k+p) E Tr Y_{k+p}^{2p}``, k the maximal degree."""
    k = g.max_degree
    lhs = shape_trace_moment(g, p).value
    rhs = Fraction(g.n, k + p) * _complete_moment(k + p, p)
    return InequalityCheck(lhs, rhs, lhs <= rhs)


def _exact_stack(ens: CoefficientEnsemble) -> list:
    return [np.array([[Fraction(x) for x in row] for row in a.tolist()], dtype=object)
            for a in ens.A]


def wick_trace_moment(ens: CoefficientEnsemble, p: int, budget: int = 2 * 10 ** 5) -> Fraction:
    """``E Tr (sum_k g_k A_k)^{2p}`` by summing over pairings of the ``2p`` factors."""
    s = ens.s
    n_pairings = math.prod(range(1, 2 * p, 2))
    if n_pairings * s ** p > budget:
        raise BudgetError(f"Wick expansion needs {n_pairings * s ** p} products (budget {budget})")
    A = _exact_stack(ens)

    def pairings(items):
        if not items:
            yield []
            return
        first = items[0]
        for i in range(1, len(items)):
            rest = items[1:i] + items[i + 1:]
            for pr in pairings(rest):
                yield [(first, items[i])] + pr

    total = Fraction(0)
    for pr in pairings(list(range(2 * p))):
        for labels in itertools.product(range(s), repeat=p):
            slot = [0] * (2 * p)
            for (a, b), k in zip(pr, labels):
                slot[a] = slot[b] = k
            m = A[slot[0]]
            for k in slot[1:]:
                m = m.dot(A[k])
            total += sum(m[i, i] for i in range(ens.n))
    return total


def nck_moment_check(ens: CoefficientEnsemble, p: int, budget: int = STEP_BUDGET) -> InequalityCheck:
    """``E Tr X^{2p}`` against ``(2p - 1)^p Tr[(sum_k A_k^2)^p]``.

    The left side uses direct enumeration when the ensemble has independent
    entries and the pairing expansion otherwise.
    """
    if p < 1:
        raise ModelError("p must be a positive integer")
    A = _exact_stack(ens)
    n = ens.n
    if pattern_from_coefficients(ens) is not None:
        var = [[Fraction(0)] * n for _ in range(n)]
        for a in A:
            for i in range(n):
                for j in range(i, n):
                    if a[i, j]:
                        var[i][j] += a[i, j] ** 2
                        var[j][i] = var[i][j]
        lhs = _direct_from_variances(var, p, GAUSSIAN, budget)
    else:
        lhs = wick_trace_moment(ens, p)
    s2 = sum((a.dot(a) for a in A[1:]), A[0].dot(A[0]))
    m = s2
    for _ in range(p - 1):
        m = m.dot(s2)
    rhs = (2 * p - 1) ** p * sum(m[i, i] for i in range(n))
    return InequalityCheck(lhs, Fraction(rhs), lhs <= rhs * (1 + Fraction(1, 10 ** 9)))


@dataclass(frozen=True)
class ComparisonCheck:
    rademacher: Fraction
    gaussian: Fraction
    holds: bool

    def to_dict(self) -> dict:
        return {"rademacher": str(self.rademacher), "gaussian": str(self.gaussian),
                "holds": self.holds}


def subgaussian_comparison_check(vp, p: int, budget: int = STEP_BUDGET) -> ComparisonCheck:
    rad = direct_trace_moment(vp, p, RADEMACHER, budget).value
    gau = direct_trace_moment(vp, p, GAUSSIAN, budget).value
    return ComparisonCheck(rad, gau, rad <= gau)


def shape_rows(p: int, allow_loops: bool = False):
    """CSV rows describing every canonical even shape of length ``2p``."""
    yield ("sequence", "distinct_vertices", "distinct_edges", "m_ell", "weight_gaussian",
           "weight_rademacher")
    for s in enumerate_even_shapes(p, allow_loops):
        yield ("-".join(map(str, s.sequence)), s.distinct_vertices, s.distinct_edges,
               ";".join(f"{ell}:{m}" for ell, m in s.m_ell.items()), s.weight(GAUSSIAN),
               s.weight(RADEMACHER))
