"""Independent reference computations used as test oracles.

Nothing here imports the package's numerical code: each oracle is a
brute-force enumeration or a one-dimensional quadrature written from the
defining formula.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np
from scipy import integrate, stats


def entry_moment(m: int, law: str) -> int:
    """``E g^m`` for a standard Gaussian or a Rademacher sign."""
    if m % 2:
        return 0
    if law == "rademacher":
        return 1
    return math.prod(range(m - 1, 0, -2))


def brute_trace_moment(b, p: int, law: str = "gaussian") -> Fraction:
    """``E Tr X^{2p}`` by summing over every closed index sequence of length ``2p``."""
    b = [[Fraction(float(x)) for x in row] for row in np.asarray(b, dtype=float)]
    n = len(b)
    total = Fraction(0)
    for seq in itertools.product(range(n), repeat=2 * p):
        mult = Counter(tuple(sorted((seq[t], seq[(t + 1) % (2 * p)]))) for t in range(2 * p))
        w = Fraction(1)
        for (i, j), m in mult.items():
            w *= b[i][j] ** m * entry_moment(m, law)
            if w == 0:
                break
        total += w
    return total


def canonical(seq) -> tuple:
    relabel = {}
    for v in seq:
        relabel.setdefault(v, len(relabel) + 1)
    return tuple(relabel[v] for v in seq)


def brute_even_shapes(p: int, allow_loops: bool) -> set:
    out = set()
    L = 2 * p
    for seq in itertools.product(range(L), repeat=L):
        c = canonical(seq)
        edges = [tuple(sorted((c[t], c[(t + 1) % L]))) for t in range(L)]
        if not allow_loops and any(i == j for i, j in edges):
            continue
        if all(m % 2 == 0 for m in Counter(edges).values()):
            out.add(c)
    return out


def brute_embeddings(shape, n: int, edges: set) -> int:
    """Injective vertex maps sending every shape edge to an edge of the graph."""
    k = max(shape)
    L = len(shape)
    sedges = {tuple(sorted((shape[t], shape[(t + 1) % L]))) for t in range(L)}
    count = 0
    for img in itertools.permutations(range(n), k):
        if all(tuple(sorted((img[i - 1], img[j - 1]))) in edges for i, j in sedges):
            count += 1
    return count


def all_graphs(n: int, loops: bool):
    """Every edge set on ``n`` labelled vertices, as sets of ``(i, j)`` with ``i <= j``."""
    cand = [(i, j) for i in range(n) for j in range(i if loops else i + 1, n)]
    for mask in range(1 << len(cand)):
        yield {cand[t] for t in range(len(cand)) if mask >> t & 1}


def expected_max_abs_normal(m: int) -> float:
    """``E max_{k<=m} |g_k|`` as ``int_0^inf 1 - (2 Phi(t) - 1)^m dt``."""
    f = lambda t: 1.0 - (2.0 * stats.norm.cdf(t) - 1.0) ** m  # noqa: E731
    return integrate.quad(f, 0, np.inf, limit=200)[0]


def expected_abs_chi2_deviation(n: int) -> float:
    """``E |chi2_n / n - 1|`` by quadrature against the chi-square density."""
    f = lambda y: abs(y / n - 1.0) * stats.chi2.pdf(y, n)  # noqa: E731
    return integrate.quad(f, 0, n, limit=200)[0] + integrate.quad(f, n, np.inf, limit=200)[0]


def semicircle_bin_mass(lo: float, hi: float) -> float:
    g = lambda x: (x * math.sqrt(4 - x * x) / 2 + 2 * math.asin(x / 2)) / (2 * math.pi)  # noqa: E731
    lo, hi = max(lo, -2.0), min(hi, 2.0)
    return g(hi) - g(lo) if hi > lo else 0.0
