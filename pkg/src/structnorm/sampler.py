"""Seeded sampling, spectral norms and Monte Carlo estimators.

Sample ``t`` of a run with seed ``s`` is drawn from
``numpy.random.default_rng([s, t])``: the pair is hashed by
``SeedSequence`` into an independent stream, so any subset of samples can
be regenerated alone and results do not depend on the number of workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import LinearOperator, aslinearoperator
from scipy.special import logsumexp

from .errors import ModelError, NumericError
from .model import (COEFFICIENT, COVARIANCE, RADEMACHER, MatrixModel)

__all__ = [
    "MCEstimate", "ESDHistogram", "VarianceCheck", "derive_seed", "sample_rng", "sample_matrix",
    "spectral_norm", "lanczos_norm", "sample_statistics", "mc_norm", "mc_norm_squared",
    "mc_norm_moment", "mc_variance_check", "mc_max_entry", "mc_row_norm_max",
    "mc_trace_moment", "esd_histogram", "default_samples", "semicircle_density",
    "normal_density", "bin_masses", "tv_distance",
]

DENSE_MAX = 2000
SPARSE_FILL = 0.05
LANCZOS_MAX_ITER = 200
LANCZOS_TOL = 1e-8


def default_samples(n: int) -> int:
    return 200 if n <= 512 else 50


def derive_seed(seed: int, index: int) -> int:
    """Independent 63-bit seed for sub-experiment ``index`` of a run seeded with ``seed``."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(2, np.uint64)[0] >> np.uint64(1))


def sample_rng(seed: int, t: int) -> np.random.Generator:
    if seed < 0 or t < 0:
        raise ModelError("seeds and sample indices must be nonnegative")
    return np.random.default_rng([int(seed), int(t)])


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    variance: float
    n_samples: int
    seed: int
    values: np.ndarray | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_values(cls, values, seed: int) -> "MCEstimate":
        v = np.asarray(values, dtype=float)
        if v.size < 2:
            raise ModelError("need at least 2 samples for a standard error")
        var = float(np.var(v, ddof=1))
        return cls(float(np.mean(v)), math.sqrt(var / v.size), var, int(v.size), seed, v)

    def to_dict(self, include_values: bool = False) -> dict:
        out = {"mean": self.mean, "std_error": self.std_error, "variance": self.variance,
               "n_samples": self.n_samples, "seed": self.seed}
        if include_values and self.values is not None:
            out["values"] = self.values.tolist()
        return out


@dataclass(frozen=True)
class ESDHistogram:
    edges: np.ndarray
    counts: np.ndarray
    n_samples: int
    scale: float

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.counts.sum() * np.diff(self.edges))

    def to_dict(self) -> dict:
        return {"edges": self.edges.tolist(), "counts": self.counts.tolist(),
                "n_samples": self.n_samples, "scale": self.scale}

    def csv_rows(self):
        yield ("bin_left", "bin_right", "count")
        for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts):
            yield (float(lo), float(hi), int(c))


@dataclass(frozen=True)
class VarianceCheck:
    var_hat: float
    sigma_star_sq: float
    var_se: float
    n_samples: int


# -- sampling ------------------------------------------------------------------

class _Drawer:
    """Precomputed support of an entrywise model; upper triangle in row-major order."""

    def __init__(self, model: MatrixModel):
        self.model = model
        self.n = model.n
        if model.kind == COEFFICIENT:
            self.stack = model.data.stack
            return
        b = model.pattern.b
        iu, ju = np.triu_indices(self.n)
        keep = b[iu, ju] > 0
        self.iu, self.ju = iu[keep], ju[keep]
        self.bv = b[self.iu, self.ju]
        nnz = 2 * self.iu.size - int(np.sum(self.iu == self.ju))
        self.fill = nnz / (self.n * self.n)
        self._find_blocks()

    def _find_blocks(self):
        # the norm of a block-diagonal matrix is the largest block norm, so
        # independent components of the support are eigensolved separately
        support = sp.coo_matrix((np.ones(self.iu.size), (self.iu, self.ju)), shape=(self.n, self.n))
        n_comp, labels = connected_components(support, directed=False)
        self.singles, self.groups = None, None
        if n_comp < 2:
            return
        order = np.argsort(labels, kind="stable")
        parts = np.split(order, np.cumsum(np.bincount(labels))[:-1])
        self.singles = np.array([g[0] for g in parts if g.size == 1], dtype=np.intp)
        by_size = {}
        for g in parts:
            if g.size > 1:
                by_size.setdefault(g.size, []).append(g)
        self.groups = [np.stack(gs) for _, gs in sorted(by_size.items())]

    def values(self, rng: np.random.Generator) -> np.ndarray:
        if self.model.kind == RADEMACHER:
            return self.bv * (2.0 * rng.integers(0, 2, size=self.bv.size) - 1.0)
        return self.bv * rng.standard_normal(self.bv.size)

    def dense(self, rng) -> np.ndarray:
        if self.model.kind == COEFFICIENT:
            g = rng.standard_normal(len(self.stack))
            return np.tensordot(g, self.stack, axes=1)
        x = np.zeros((self.n, self.n))
        v = self.values(rng)
        x[self.iu, self.ju] = v
        x[self.ju, self.iu] = v
        return x

    def sparse(self, rng) -> sp.csr_matrix:
        v = self.values(rng)
        off = self.iu != self.ju
        rows = np.concatenate([self.iu, self.ju[off]])
        cols = np.concatenate([self.ju, self.iu[off]])
        return sp.csr_matrix((np.concatenate([v, v[off]]), (rows, cols)), shape=(self.n, self.n))

    def use_sparse(self) -> bool:
        return self.model.kind != COEFFICIENT and self.n > DENSE_MAX and self.fill < SPARSE_FILL

    def draw(self, rng):
        return self.sparse(rng) if self.use_sparse() else self.dense(rng)

    def norm(self, x) -> float:
        if self.model.kind == COEFFICIENT or self.groups is None:
            return spectral_norm(x)
        diag = x.diagonal()
        if not np.all(np.isfinite(diag)):
            raise NumericError("matrix has non-finite entries")
        best = float(np.abs(diag[self.singles]).max(initial=0.0))
        for idx in self.groups:
            k = idx.shape[1]
            if sp.issparse(x) and k > DENSE_MAX:
                for g in idx:
                    best = max(best, spectral_norm(x[g][:, g]))
                continue
            if sp.issparse(x):
                flat = idx.ravel()
                sub = x.tocsr()[flat][:, flat].tocoo()
                blocks = np.zeros((idx.shape[0], k, k))
                blocks[sub.row // k, sub.row % k, sub.col % k] = sub.data
            else:
                blocks = x[idx[:, :, None], idx[:, None, :]]
            if not np.all(np.isfinite(blocks)):
                raise NumericError("matrix has non-finite entries")
            ev = np.linalg.eigvalsh(blocks)
            best = max(best, float(np.abs(ev[:, [0, -1]]).max()))
        return best


@lru_cache(maxsize=32)
def _drawer(model: MatrixModel) -> _Drawer:
    if model.kind == COVARIANCE:
        raise ModelError("covariance models are sampled by structnorm.covariance")
    return _Drawer(model)


def sample_matrix(model: MatrixModel, seed: int, t: int = 0) -> np.ndarray:
    """Dense symmetric sample ``t`` of ``model`` under ``seed``."""
    return _drawer(model).dense(sample_rng(seed, t))


# -- spectral norm -------------------------------------------------------------

def lanczos_norm(op, n: int, max_iter: int = LANCZOS_MAX_ITER, rel_tol: float = LANCZOS_TOL,
                 seed: int = 0) -> float:
    """Largest ``|eigenvalue|`` of a symmetric operator by Lanczos with full reorthogonalization.

    Stops once the residual ``|beta_k y_k|`` of the extreme Ritz pair falls
    below ``rel_tol`` times the Ritz value, or the Krylov space is exhausted.
    """
    if not isinstance(op, LinearOperator):
        op = aslinearoperator(op)
    k_max = min(max_iter, n)
    q = np.random.default_rng(seed).standard_normal(n)
    q /= np.linalg.norm(q)
    Q = np.zeros((k_max + 1, n))
    Q[0] = q
    alpha = np.zeros(k_max)
    beta = np.zeros(k_max)
    theta = 0.0
    for k in range(k_max):
        w = op.matvec(Q[k]).ravel()
        if not np.all(np.isfinite(w)):
            raise NumericError("non-finite value in Lanczos iteration")
        alpha[k] = Q[k] @ w
        w = w - alpha[k] * Q[k] - (beta[k - 1] * Q[k - 1] if k else 0.0)
        # two passes of classical Gram-Schmidt against the whole basis
        w -= Q[:k + 1].T @ (Q[:k + 1] @ w)
        w -= Q[:k + 1].T @ (Q[:k + 1] @ w)
        beta[k] = np.linalg.norm(w)
        if k == 0:
            evals, evecs = np.array([alpha[0]]), np.ones((1, 1))
        else:
            evals, evecs = eigh_tridiagonal(alpha[:k + 1], beta[:k])
        i = int(np.argmax(np.abs(evals)))
        theta = abs(evals[i])
        resid = abs(beta[k] * evecs[-1, i])
        if beta[k] <= 1e-12 * max(theta, 1e-300) or resid <= rel_tol * theta:
            break
        Q[k + 1] = w / beta[k]
    return float(theta)


def spectral_norm(m, rel_tol: float = LANCZOS_TOL, dense_max: int = DENSE_MAX) -> float:
    """Largest absolute eigenvalue of a symmetric matrix.

    Dense arrays up to ``dense_max`` use a full symmetric eigensolve; larger
    arrays, sparse matrices and ``LinearOperator`` inputs use Lanczos.
    """
    if isinstance(m, LinearOperator):
        return lanczos_norm(m, m.shape[0], rel_tol=rel_tol)
    if sp.issparse(m):
        if not np.all(np.isfinite(m.data)):
            raise NumericError("matrix has non-finite entries")
        n = m.shape[0]
        coo = m.tocoo()
        if np.array_equal(coo.row, coo.col):
            # diagonal: the eigenvalues are the entries themselves
            return float(np.abs(coo.data).max(initial=0.0))
        if n <= dense_max:
            return spectral_norm(m.toarray(), rel_tol, dense_max)
        return lanczos_norm(aslinearoperator(m), n, rel_tol=rel_tol)
    a = np.asarray(m, dtype=float)
    if not np.all(np.isfinite(a)):
        raise NumericError("matrix has non-finite entries")
    if a.shape[0] == 0:
        return 0.0
    if a.shape[0] <= dense_max:
        ev = np.linalg.eigvalsh(a)
        return float(max(abs(ev[0]), abs(ev[-1])))
    return lanczos_norm(aslinearoperator(a), a.shape[0], rel_tol=rel_tol)


# -- Monte Carlo ---------------------------------------------------------------

def _row_norm_max(x) -> float:
    if sp.issparse(x):
        return float(np.sqrt(np.asarray(x.multiply(x).sum(axis=1)).max()))
    return float(np.sqrt(np.max(np.sum(x * x, axis=1))))


def _max_entry(x) -> float:
    if sp.issparse(x):
        return float(np.abs(x.data).max()) if x.nnz else 0.0
    return float(np.max(np.abs(x)))


_STATS = {
    "norm": spectral_norm,
    "max_entry": _max_entry,
    "row_norm_max": _row_norm_max,
}


def sample_statistics(model: MatrixModel, n_samples: int, seed: int,
                      stats=("norm",), workers: int = 1) -> dict:
    """Per-sample statistics, one array per name in ``stats``, ordered by sample index."""
    if n_samples < 1:
        raise ModelError("n_samples must be positive")
    drawer = _drawer(model)
    funcs = [drawer.norm if s == "norm" else _STATS[s] for s in stats]

    def one(t):
        x = drawer.draw(sample_rng(seed, t))
        return [f(x) for f in funcs]

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            rows = list(ex.map(one, range(n_samples)))
    else:
        rows = [one(t) for t in range(n_samples)]
    arr = np.array(rows, dtype=float).reshape(n_samples, len(funcs))
    return {s: arr[:, i] for i, s in enumerate(stats)}


def _check_samples(n_samples: int, minimum: int = 2):
    if n_samples < minimum:
        raise ModelError(f"n_samples must be at least {minimum}")


def mc_norm(model: MatrixModel, n_samples: int, seed: int, workers: int = 1) -> MCEstimate:
    """Monte Carlo estimate of ``E ||X||``."""
    _check_samples(n_samples)
    v = sample_statistics(model, n_samples, seed, ("norm",), workers)["norm"]
    return MCEstimate.from_values(v, seed)


def mc_norm_squared(model: MatrixModel, n_samples: int, seed: int, workers: int = 1) -> MCEstimate:
    _check_samples(n_samples)
    v = sample_statistics(model, n_samples, seed, ("norm",), workers)["norm"]
    return MCEstimate.from_values(v ** 2, seed)


def _moment_estimate(norms: np.ndarray, p: int, seed: int) -> MCEstimate:
    n = norms.size
    if np.all(norms == 0):
        return MCEstimate(0.0, 0.0, 0.0, n, seed, norms)
    with np.errstate(divide="ignore"):
        logs = p * np.log(norms)
    if np.max(logs) > 700:
        log_m = logsumexp(logs) - math.log(n)
        est = math.exp(log_m / p)
        # relative spread of ||X||^p computed after scaling by its maximum
        scaled = np.exp(logs - np.max(logs))
        rel_se = np.std(scaled, ddof=1) / math.sqrt(n) / np.mean(scaled)
    else:
        powers = norms ** p
        m = float(np.mean(powers))
        est = m ** (1.0 / p)
        rel_se = float(np.std(powers, ddof=1)) / math.sqrt(n) / m
    se = est * rel_se / p
    return MCEstimate(float(est), float(se), float(se * se * n), n, seed, norms)


def mc_norm_moment(model: MatrixModel, p: int, n_samples: int, seed: int,
                   workers: int = 1) -> MCEstimate:
    """Estimate ``E[||X||^p]^{1/p}`` with a delta-method standard error.

    ``values`` holds the per-sample norms; ``p = 1`` reproduces :func:`mc_norm`.
    """
    if p < 1:
        raise ModelError("moment order p must be a positive integer")
    _check_samples(n_samples)
    norms = sample_statistics(model, n_samples, seed, ("norm",), workers)["norm"]
    if p == 1:
        return MCEstimate.from_values(norms, seed)
    return _moment_estimate(norms, p, seed)


def mc_variance_check(model: MatrixModel, n_samples: int, seed: int,
                      workers: int = 1) -> VarianceCheck:
    """Sample variance of ``||X||`` next to ``sigma_star^2`` (Gaussian concentration)."""
    from .structural import sigma_star

    if not model.is_gaussian:
        raise ModelError("variance check needs a Gaussian model")
    _check_samples(n_samples, 50)
    est = mc_norm(model, n_samples, seed, workers)
    s_star = sigma_star(model)
    var_se = est.variance * math.sqrt(2.0 / (n_samples - 1))
    return VarianceCheck(est.variance, s_star ** 2, var_se, n_samples)


def mc_max_entry(model: MatrixModel, n_samples: int, seed: int, workers: int = 1) -> MCEstimate:
    """Estimate ``E max_ij |X_ij|``."""
    _check_samples(n_samples)
    v = sample_statistics(model, n_samples, seed, ("max_entry",), workers)["max_entry"]
    return MCEstimate.from_values(v, seed)


def mc_row_norm_max(model: MatrixModel, n_samples: int, seed: int, workers: int = 1) -> MCEstimate:
    """Estimate ``E max_i ||row_i(X)||_2``."""
    _check_samples(n_samples)
    v = sample_statistics(model, n_samples, seed, ("row_norm_max",), workers)["row_norm_max"]
    return MCEstimate.from_values(v, seed)


def mc_trace_moment(model: MatrixModel, p: int, n_samples: int, seed: int) -> MCEstimate:
    """Estimate ``E Tr X^{2p}`` from the eigenvalues of each sample."""
    _check_samples(n_samples)
    drawer = _drawer(model)
    vals = np.empty(n_samples)
    for t in range(n_samples):
        ev = np.linalg.eigvalsh(drawer.dense(sample_rng(seed, t)))
        vals[t] = np.sum(ev ** (2 * p))
    return MCEstimate.from_values(vals, seed)


def esd_histogram(model: MatrixModel, n_samples: int, bins: int, seed: int,
                  scale: float | None = None, lim: float = 3.0) -> ESDHistogram:
    """Histogram of the eigenvalues of ``X / scale`` on ``[-lim, lim]``, pooled over samples.

    ``scale`` defaults to ``sigma(model)`` (``sqrt(n)`` for a Wigner matrix).
    Eigenvalues outside the window are counted in the end bins.
    """
    from .structural import sigma

    if bins < 10:
        raise ModelError("bins must be at least 10")
    _check_samples(n_samples, 1)
    if scale is None:
        scale = sigma(model) or 1.0
    drawer = _drawer(model)
    edges = np.linspace(-lim, lim, bins + 1)
    counts = np.zeros(bins, dtype=np.int64)
    for t in range(n_samples):
        ev = np.linalg.eigvalsh(drawer.dense(sample_rng(seed, t))) / scale
        counts += np.histogram(np.clip(ev, -lim, lim), bins=edges)[0]
    return ESDHistogram(edges, counts, n_samples, float(scale))


def semicircle_density(x):
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.clip(4.0 - x * x, 0.0, None)) / (2 * np.pi)


def normal_density(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / math.sqrt(2 * np.pi)


def bin_masses(density, edges) -> np.ndarray:
    """Probability mass of ``density`` in each bin, by adaptive quadrature."""
    return np.array([quad(lambda u: float(density(u)), lo, hi)[0]
                     for lo, hi in zip(edges[:-1], edges[1:])])


def tv_distance(hist: ESDHistogram, density) -> float:
    """Total variation between the normalized histogram and a reference density.

    Reference mass outside the window counts fully toward the distance.
    """
    p = hist.counts / hist.counts.sum()
    q = bin_masses(density, hist.edges)
    outside = max(0.0, 1.0 - q.sum())
    return float(0.5 * (np.abs(p - q).sum() + outside))
