"""Matrix-structure models.

Every random matrix handled by the package is described by a
:class:`MatrixModel`, a tagged union over five laws:

=========================  ==========================================
kind                       law
=========================  ==========================================
``independent_gaussian``   ``X_ij = b_ij g_ij``, g i.i.d. N(0, 1)
``coefficient_gaussian``   ``X = sum_k g_k A_k``
``sparse_wigner``          ``X_ij = 1{ij in E} g_ij``
``independent_rademacher`` ``X_ij = b_ij eps_ij``, eps uniform +-1
``covariance``             sample covariance of N(0, Sigma) vectors
=========================  ==========================================

Indices are 0-based in storage and in serialized files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ModelError

__all__ = [
    "VariancePattern", "CoefficientEnsemble", "SparsityGraph", "CovarianceModel",
    "MatrixModel", "build_wigner", "build_diagonal", "build_block", "build_sparse_wigner",
    "build_pattern", "build_rademacher", "build_coefficient", "build_covariance",
    "coefficients_from_pattern", "pattern_from_coefficients", "dilate",
    "path_graph", "complete_graph", "random_sparse_graph",
    "model_from_dict", "model_to_dict", "load_model",
]

GAUSSIAN = "independent_gaussian"
COEFFICIENT = "coefficient_gaussian"
SPARSE = "sparse_wigner"
RADEMACHER = "independent_rademacher"
COVARIANCE = "covariance"
KINDS = (GAUSSIAN, COEFFICIENT, SPARSE, RADEMACHER, COVARIANCE)


def _check_dim(n) -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise ModelError(f"dimension must be a positive integer, got {n!r}")
    return int(n)


def _frozen_array(a, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise ModelError(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class VariancePattern:
    """Symmetric array of entry standard deviations ``b_ij``."""

    b: np.ndarray

    def __post_init__(self):
        b = _frozen_array(self.b, "b")
        if not np.all(np.isfinite(b)):
            raise ModelError("variance pattern has non-finite entries")
        if np.any(b < 0):
            raise ModelError("variance pattern has negative entries")
        if not np.array_equal(b, b.T):
            raise ModelError("variance pattern is not symmetric")
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.b.shape[0]

    def scaled(self, c: float) -> "VariancePattern":
        return VariancePattern(c * self.b)

    def permuted(self, perm: Sequence[int]) -> "VariancePattern":
        perm = np.asarray(perm)
        return VariancePattern(self.b[np.ix_(perm, perm)])


@dataclass(frozen=True, eq=False)
class CoefficientEnsemble:
    """Fixed symmetric matrices ``A_1, ..., A_s`` of the model ``X = sum_k g_k A_k``."""

    A: tuple

    def __post_init__(self):
        mats = [np.array(a, dtype=float) for a in self.A]
        if not mats:
            raise ModelError("coefficient ensemble must contain at least one matrix")
        n = mats[0].shape[0]
        for a in mats:
            if a.shape != (n, n) or n == 0:
                raise ModelError("coefficient matrices must share one square shape")
            if not np.all(np.isfinite(a)):
                raise ModelError("coefficient matrix has non-finite entries")
            if not np.array_equal(a, a.T):
                raise ModelError("coefficient matrices must be exactly symmetric")
            a.setflags(write=False)
        object.__setattr__(self, "A", tuple(mats))

    @property
    def n(self) -> int:
        return self.A[0].shape[0]

    @property
    def s(self) -> int:
        return len(self.A)

    @cached_property
    def stack(self) -> np.ndarray:
        """Coefficients as one ``(s, n, n)`` array."""
        st = np.stack(self.A)
        st.setflags(write=False)
        return st

    def second_moment(self) -> np.ndarray:
        """``E X^2 = sum_k A_k^2``."""
        st = self.stack
        return np.einsum("kij,kjl->il", st, st)


@dataclass(frozen=True, eq=False)
class SparsityGraph:
    """Undirected graph on vertices ``0..n-1``; a loop ``(i, i)`` marks a diagonal entry."""

    n: int
    edges: frozenset = field(default_factory=frozenset)
    allow_loops: bool = False

    def __post_init__(self):
        n = _check_dim(self.n)
        seen = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if not (0 <= i < n and 0 <= j < n):
                raise ModelError(f"edge {e!r} has an endpoint outside [0, {n})")
            if i == j and not self.allow_loops:
                raise ModelError(f"self-loop {e!r} given but allow_loops is false")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ModelError(f"duplicate edge {e!r}")
            seen.add(key)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", frozenset(seen))

    @cached_property
    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n))
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = 1.0
        adj.setflags(write=False)
        return adj

    @cached_property
    def neighbors(self) -> tuple:
        nb = [set() for _ in range(self.n)]
        for i, j in self.edges:
            nb[i].add(j)
            nb[j].add(i)
        return tuple(frozenset(s) for s in nb)

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    @property
    def max_degree(self) -> int:
        return max((len(s) for s in self.neighbors), default=0)

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """``n`` i.i.d. samples of N(0, sigma) in dimension ``d``."""

    sigma: np.ndarray
    n: int

    def __post_init__(self):
        sig = _frozen_array(self.sigma, "sigma")
        if not np.all(np.isfinite(sig)):
            raise ModelError("covariance has non-finite entries")
        if not np.array_equal(sig, sig.T):
            raise ModelError("covariance is not symmetric")
        evals = np.linalg.eigvalsh(sig)
        scale = np.max(np.abs(evals)) if evals.size else 0.0
        if evals[0] < -1e-10 * scale:
            raise ModelError(f"covariance is not positive semidefinite (min eigenvalue {evals[0]:.3g})")
        object.__setattr__(self, "sigma", sig)
        object.__setattr__(self, "n", _check_dim(self.n))

    @property
    def d(self) -> int:
        return self.sigma.shape[0]

    @cached_property
    def root(self) -> np.ndarray:
        """Symmetric square root with negative eigenvalues clipped at zero."""
        w, v = np.linalg.eigh(self.sigma)
        r = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
        r = 0.5 * (r + r.T)
        r.setflags(write=False)
        return r

    @cached_property
    def root_diagonal(self) -> np.ndarray | None:
        """Diagonal of the square root when sigma is diagonal, else None."""
        if np.count_nonzero(self.sigma - np.diag(np.diag(self.sigma))):
            return None
        return np.sqrt(np.clip(np.diag(self.sigma), 0.0, None))

    def with_samples(self, n: int) -> "CovarianceModel":
        return CovarianceModel(self.sigma, n)


@dataclass(frozen=True, eq=False)
class MatrixModel:
    """Tagged union over the supported random-matrix laws."""

    kind: str
    data: object
    name: str = ""

    def __post_init__(self):
        expected = {
            GAUSSIAN: VariancePattern, RADEMACHER: VariancePattern,
            COEFFICIENT: CoefficientEnsemble, SPARSE: SparsityGraph,
            COVARIANCE: CovarianceModel,
        }
        if self.kind not in expected:
            raise ModelError(f"unknown model kind {self.kind!r}")
        if not isinstance(self.data, expected[self.kind]):
            raise ModelError(f"{self.kind} model needs a {expected[self.kind].__name__}")
        if not self.name:
            object.__setattr__(self, "name", f"{self.kind}_{self.n}")

    @property
    def n(self) -> int:
        if self.kind == COVARIANCE:
            return self.data.d
        return self.data.n

    @property
    def is_entrywise(self) -> bool:
        return self.kind in (GAUSSIAN, SPARSE, RADEMACHER)

    @property
    def is_gaussian(self) -> bool:
        return self.kind in (GAUSSIAN, SPARSE, COEFFICIENT)

    @cached_property
    def pattern(self) -> VariancePattern | None:
        """Entrywise standard deviations, or None for coefficient and covariance models."""
        if self.kind in (GAUSSIAN, RADEMACHER):
            return self.data
        if self.kind == SPARSE:
            return VariancePattern(self.data.adjacency)
        return None

    def scaled(self, c: float) -> "MatrixModel":
        if self.kind in (GAUSSIAN, RADEMACHER):
            return MatrixModel(self.kind, self.data.scaled(c), f"{self.name}*{c:g}")
        if self.kind == SPARSE:
            return MatrixModel(GAUSSIAN, self.pattern.scaled(c), f"{self.name}*{c:g}")
        if self.kind == COEFFICIENT:
            return MatrixModel(COEFFICIENT, CoefficientEnsemble(tuple(c * a for a in self.data.A)),
                               f"{self.name}*{c:g}")
        return MatrixModel(COVARIANCE, CovarianceModel(c * self.data.sigma, self.data.n),
                           f"{self.name}*{c:g}")


def build_wigner(n: int) -> MatrixModel:
    """Standard Gaussian entries on and above the diagonal (``b_ij = 1``)."""
    n = _check_dim(n)
    return MatrixModel(GAUSSIAN, VariancePattern(np.ones((n, n))), f"wigner_{n}")


def build_diagonal(n: int) -> MatrixModel:
    n = _check_dim(n)
    return MatrixModel(GAUSSIAN, VariancePattern(np.eye(n)), f"diagonal_{n}")


def build_block(n: int, k: int) -> MatrixModel:
    """``n/k`` independent ``k x k`` Wigner blocks on the diagonal."""
    n = _check_dim(n)
    k = _check_dim(k)
    if k > n:
        raise ModelError(f"block size k={k} exceeds n={n}")
    if n % k:
        raise ModelError(f"block size k={k} does not divide n={n}")
    b = np.kron(np.eye(n // k), np.ones((k, k)))
    return MatrixModel(GAUSSIAN, VariancePattern(b), f"block_{n}_{k}")


def build_sparse_wigner(g: SparsityGraph) -> MatrixModel:
    return MatrixModel(SPARSE, g, f"graph_{g.n}_{len(g.edges)}")


def build_pattern(b, name: str = "") -> MatrixModel:
    return MatrixModel(GAUSSIAN, VariancePattern(b), name)


def build_rademacher(b, name: str = "") -> MatrixModel:
    return MatrixModel(RADEMACHER, VariancePattern(b), name)


def build_coefficient(A: Iterable, name: str = "") -> MatrixModel:
    return MatrixModel(COEFFICIENT, CoefficientEnsemble(tuple(A)), name)


def build_covariance(sigma, n: int, name: str = "") -> MatrixModel:
    return MatrixModel(COVARIANCE, CovarianceModel(sigma, n), name)


def coefficients_from_pattern(vp: VariancePattern) -> CoefficientEnsemble:
    """Rewrite an independent-entry pattern as a coefficient ensemble.

    One coefficient per nonzero upper-triangular entry, in row-major order
    ``(0,0), (0,1), ..., (1,1), ...``: ``b_ii e_i e_i^T`` on the diagonal and
    ``b_ij (e_i e_j^T + e_j e_i^T)`` off it. The order matches the draw order
    of :func:`structnorm.sampler.sample_matrix`, so both representations give
    the same matrix for the same seed.
    """
    n = vp.n
    iu, ju = np.triu_indices(n)
    mats = []
    for i, j in zip(iu, ju):
        v = vp.b[i, j]
        if v > 0:
            a = np.zeros((n, n))
            a[i, j] = v
            a[j, i] = v
            mats.append(a)
    if not mats:
        raise ModelError("zero pattern has no coefficients (degenerate model)")
    return CoefficientEnsemble(tuple(mats))


def pattern_from_coefficients(ens: CoefficientEnsemble) -> VariancePattern | None:
    """Recover ``b`` when every coefficient touches a single symmetric entry pair.

    Returns None when some ``A_k`` couples several entries (the entries of X
    are then correlated and no variance pattern describes the law).
    """
    n = ens.n
    var = np.zeros((n, n))
    for a in ens.A:
        nz = np.argwhere(np.triu(a) != 0)
        if len(nz) == 0:
            continue
        if len(nz) > 1:
            return None
        i, j = nz[0]
        var[i, j] += a[i, j] ** 2
        var[j, i] = var[i, j]
    return VariancePattern(np.sqrt(var))


def dilate(rect) -> np.ndarray:
    """Symmetric ``[[0, X], [X^T, 0]]`` embedding; preserves the spectral norm."""
    x = np.asarray(rect, dtype=float)
    if x.ndim != 2:
        raise ModelError("dilate needs a 2-d array")
    n, m = x.shape
    out = np.zeros((n + m, n + m))
    out[:n, n:] = x
    out[n:, :n] = x.T
    return out


def path_graph(n: int) -> SparsityGraph:
    return SparsityGraph(n, frozenset((i, i + 1) for i in range(n - 1)))


def complete_graph(n: int, loops: bool = True) -> SparsityGraph:
    edges = {(i, j) for i in range(n) for j in range(i if loops else i + 1, n)}
    return SparsityGraph(n, frozenset(edges), allow_loops=loops)


def random_sparse_graph(n: int, edge_prob: float, seed: int, loops: bool = False) -> SparsityGraph:
    """Erdos-Renyi graph with independent edges of probability ``edge_prob``."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 0 if loops else 1)
    keep = rng.random(iu.size) < edge_prob
    return SparsityGraph(n, frozenset(zip(iu[keep].tolist(), ju[keep].tolist())), allow_loops=loops)


# -- model file format -------------------------------------------------------

_FILE_KEYS = {
    "wigner": {"n"},
    "diagonal": {"n"},
    "block": {"n", "k"},
    "pattern": {"b"},
    "rademacher_pattern": {"b"},
    "graph": {"n", "edges", "allow_loops"},
    "covariance": {"sigma", "samples"},
}
_OPTIONAL_KEYS = {"graph": {"allow_loops"}}


def model_from_dict(doc: dict) -> MatrixModel:
    """Parse the JSON model format. Unknown or missing keys raise :class:`ModelError`."""
    if not isinstance(doc, dict):
        raise ModelError("model description must be a JSON object")
    kind = doc.get("kind")
    if kind not in _FILE_KEYS:
        raise ModelError(f"unknown model kind {kind!r}; expected one of {sorted(_FILE_KEYS)}")
    allowed = _FILE_KEYS[kind] | {"kind", "name"}
    extra = set(doc) - allowed
    if extra:
        raise ModelError(f"unknown keys for kind {kind!r}: {sorted(extra)}")
    missing = _FILE_KEYS[kind] - _OPTIONAL_KEYS.get(kind, set()) - set(doc)
    if missing:
        raise ModelError(f"missing keys for kind {kind!r}: {sorted(missing)}")
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise ModelError("name must be a string")
    try:
        if kind == "wigner":
            m = build_wigner(doc["n"])
        elif kind == "diagonal":
            m = build_diagonal(doc["n"])
        elif kind == "block":
            m = build_block(doc["n"], doc["k"])
        elif kind == "pattern":
            m = build_pattern(doc["b"])
        elif kind == "rademacher_pattern":
            m = build_rademacher(doc["b"])
        elif kind == "graph":
            loops = doc.get("allow_loops", False)
            if not isinstance(loops, bool):
                raise ModelError("allow_loops must be a boolean")
            edges = doc["edges"]
            if not isinstance(edges, list) or any(
                    not isinstance(e, list) or len(e) != 2
                    or any(isinstance(v, bool) or not isinstance(v, int) for v in e) for e in edges):
                raise ModelError("edges must be a list of [i, j] integer pairs")
            keys = [(min(i, j), max(i, j)) for i, j in edges]
            if len(set(keys)) != len(keys):
                raise ModelError("duplicate edge in edge list")
            m = build_sparse_wigner(SparsityGraph(_check_dim(doc["n"]), frozenset(keys), loops))
        else:
            m = build_covariance(doc["sigma"], doc["samples"])
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ModelError):
            raise
        raise ModelError(f"malformed {kind} model: {exc}") from exc
    if name:
        m = MatrixModel(m.kind, m.data, name)
    return m


def model_to_dict(model: MatrixModel) -> dict:
    if model.kind == GAUSSIAN:
        out = {"kind": "pattern", "b": model.data.b.tolist()}
    elif model.kind == RADEMACHER:
        out = {"kind": "rademacher_pattern", "b": model.data.b.tolist()}
    elif model.kind == SPARSE:
        g = model.data
        out = {"kind": "graph", "n": g.n, "edges": [list(e) for e in sorted(g.edges)],
               "allow_loops": g.allow_loops}
    elif model.kind == COVARIANCE:
        out = {"kind": "covariance", "sigma": model.data.sigma.tolist(), "samples": model.data.n}
    else:
        raise ModelError("coefficient models have no file representation")
    out["name"] = model.name
    return out


def load_model(path) -> MatrixModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: invalid JSON ({exc})") from exc
    return model_from_dict(doc)
