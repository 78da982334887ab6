"""Sample-covariance experiments against the effective-rank bound."""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator

from .bounds import eval_kl
from .errors import ModelError
from .model import CovarianceModel
from .sampler import DENSE_MAX, MCEstimate, derive_seed, sample_rng, spectral_norm
from .structural import effective_rank

__all__ = ["CovarianceRun", "sample_Z", "deviation_norm", "mc_deviation", "kl_sweep",
           "runs_to_csv"]


def _gaussian_block(cm: CovarianceModel, rng) -> np.ndarray:
    # columns are the sample vectors X_k = Sigma^{1/2} g_k
    g = rng.standard_normal((cm.d, cm.n))
    diag = cm.root_diagonal
    return diag[:, None] * g if diag is not None else cm.root @ g


def sample_Z(cm: CovarianceModel, seed: int, t: int = 0) -> np.ndarray:
    """Empirical second-moment matrix ``(1/n) sum_k X_k X_k^T``."""
    x = _gaussian_block(cm, sample_rng(seed, t))
    z = (x @ x.T) / cm.n
    return 0.5 * (z + z.T)


def deviation_norm(cm: CovarianceModel, seed: int, t: int = 0) -> float:
    """``||Z - Sigma||`` for repetition ``t``; matrix-free above the dense threshold."""
    x = _gaussian_block(cm, sample_rng(seed, t))
    if cm.d <= DENSE_MAX:
        z = (x @ x.T) / cm.n
        return spectral_norm(0.5 * (z + z.T) - cm.sigma)
    if cm.root_diagonal is not None:
        sig_diag = np.diag(cm.sigma).copy()

        def sig_mv(v):
            return sig_diag * v
    else:
        def sig_mv(v):
            return cm.sigma @ v
    op = LinearOperator((cm.d, cm.d), matvec=lambda v: x @ (x.T @ v) / cm.n - sig_mv(v),
                        dtype=float)
    return spectral_norm(op)


def mc_deviation(cm: CovarianceModel, n_samples: int, seed: int, workers: int = 1) -> MCEstimate:
    """Monte Carlo estimate of ``E ||Z - Sigma||`` over independent repetitions."""
    if n_samples < 2:
        raise ModelError("n_samples must be at least 2")
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            vals = list(ex.map(lambda t: deviation_norm(cm, seed, t), range(n_samples)))
    else:
        vals = [deviation_norm(cm, seed, t) for t in range(n_samples)]
    return MCEstimate.from_values(vals, seed)


@dataclass(frozen=True)
class CovarianceRun:
    model: CovarianceModel
    deviation_estimate: MCEstimate
    kl_value: float
    ratio: float

    @property
    def effective_rank(self) -> float:
        return effective_rank(self.model).r

    def to_dict(self) -> dict:
        return {"d": self.model.d, "n": self.model.n, "r": self.effective_rank,
                "kl_value": self.kl_value, "deviation": self.deviation_estimate.to_dict(),
                "ratio": self.ratio}


def kl_sweep(sigma, n_values, n_samples: int = 100, seed: int = 0,
             workers: int = 1) -> list:
    """One :class:`CovarianceRun` per sample size; point ``i`` uses ``derive_seed(seed, i)``."""
    n_values = list(n_values)
    if not n_values:
        raise ModelError("n_values must be nonempty")
    base = CovarianceModel(sigma, n_values[0])
    effective_rank(base)  # rejects zero covariance up front
    runs = []
    for i, n in enumerate(n_values):
        cm = base.with_samples(n)
        est = mc_deviation(cm, n_samples, derive_seed(seed, i), workers)
        kl = eval_kl(cm)
        runs.append(CovarianceRun(cm, est, kl, est.mean / kl))
    return runs


def runs_to_csv(runs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["d", "n", "r", "kl_value", "mean", "se", "ratio"])
    for run in runs:
        e = run.deviation_estimate
        w.writerow([run.model.d, run.model.n, f"{run.effective_rank:.12g}", f"{run.kl_value:.12g}",
                    f"{e.mean:.12g}", f"{e.std_error:.12g}", f"{run.ratio:.12g}"])
    return buf.getvalue()
