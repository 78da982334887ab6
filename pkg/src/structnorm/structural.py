"""Structural parameters of a Gaussian matrix model.

``sigma``       ``||E X^2||^{1/2}``
``sigma_star``  ``sup_{|v|=1} E[<v, X v>^2]^{1/2}``
``sigma_tilde`` supremum over commuting unitary triples of
                ``||sum_{k,l} A_k U1 A_l U2 A_k U3 A_l||^{1/4}``

Only lower estimates are produced for the two suprema over non-convex
sets; the closed forms are used wherever they exist.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import unitary_group

from .errors import ModelError
from .model import (COEFFICIENT, COVARIANCE, CoefficientEnsemble, CovarianceModel,
                    MatrixModel, VariancePattern, pattern_from_coefficients)

__all__ = [
    "StructuralParams", "EffectiveRankResult", "sigma", "sigma_star", "sigma_star_ascent",
    "sigma_tilde_estimate", "tropp_matrix", "effective_rank", "row_profiles",
    "structural_params",
]

# sigma_tilde is O(n^4) per evaluation on entrywise models
SIGMA_TILDE_MAX_N = 32


@dataclass(frozen=True)
class StructuralParams:
    sigma: float
    sigma_star: float
    sigma_tilde_lb: float | None
    row_l2: np.ndarray
    row_l4: np.ndarray
    max_entry: float
    sigma_star_exact: bool = True

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "sigma_star": self.sigma_star,
            "sigma_star_is_lower_estimate": not self.sigma_star_exact,
            "sigma_tilde_lb": self.sigma_tilde_lb,
            "max_entry": self.max_entry,
            "row_l2": self.row_l2.tolist(),
            "row_l4": self.row_l4.tolist(),
        }


@dataclass(frozen=True)
class EffectiveRankResult:
    trace: float
    norm: float
    r: float


def row_profiles(vp: VariancePattern):
    """Return ``(row_l2, row_l4, max_entry)`` of a variance pattern."""
    b = vp.b
    row_l2 = np.sqrt(np.sum(b ** 2, axis=1))
    row_l4 = np.sum(b ** 4, axis=1) ** 0.25
    return row_l2, row_l4, float(b.max())


def _gaussian_data(model: MatrixModel):
    if model.kind == COVARIANCE:
        raise ModelError("covariance models have no sigma; use effective_rank")
    if model.kind == COEFFICIENT:
        return model.data
    return model.pattern


def sigma(model: MatrixModel) -> float:
    data = _gaussian_data(model)
    if isinstance(data, CoefficientEnsemble):
        ev = np.linalg.eigvalsh(data.second_moment())
        return float(np.sqrt(max(abs(ev[0]), abs(ev[-1]))))
    return float(row_profiles(data)[0].max())


def sigma_star_ascent(ens: CoefficientEnsemble, restarts: int = 32, max_iter: int = 500,
                      seed: int = 0, step: float = 0.1, tol: float = 1e-9) -> float:
    """Best ``(sum_k <v, A_k v>^2)^{1/2}`` found by projected gradient ascent on the sphere.

    Starts from every basis vector and from ``restarts`` random unit vectors.
    The value returned is attained at an explicit unit vector, hence a
    lower bound on sigma_star.
    """
    if restarts < 1:
        raise ModelError("restarts must be at least 1")
    st = ens.stack
    n = ens.n

    def objective(v):
        av = st @ v
        q = av @ v
        return float(q @ q), q, av

    starts = list(np.eye(n))
    for r in range(restarts):
        v = np.random.default_rng([seed, r]).standard_normal(n)
        starts.append(v / np.linalg.norm(v))

    best = 0.0
    for v in starts:
        f, q, av = objective(v)
        eta = step
        for _ in range(max_iter):
            grad = 4.0 * (q @ av)
            rgrad = grad - (grad @ v) * v
            if np.linalg.norm(rgrad) < tol * max(1.0, f):
                break
            for _ in range(40):
                w = v + eta * rgrad
                w /= np.linalg.norm(w)
                fw, qw, avw = objective(w)
                if fw >= f:
                    break
                eta *= 0.5
            else:
                break
            if fw - f <= 1e-15 * max(1.0, f):
                v, f, q, av = w, fw, qw, avw
                break
            v, f, q, av = w, fw, qw, avw
            eta = min(eta * 1.5, 1e3 * step)
        best = max(best, f)
    return float(np.sqrt(best))


def sigma_star(model: MatrixModel, restarts: int = 32, max_iter: int = 500, seed: int = 0) -> float:
    """sigma_star of a Gaussian model.

    Entrywise models use the closed form ``max_ij b_ij``. Note the exact
    supremum of ``E<v, X v>^2`` for independent entries lies between
    ``max b_ij^2`` and ``2 max b_ij^2`` (off-diagonal entries appear twice in
    the quadratic form); the closed form is the conventional value used by
    all bound expressions here. Coefficient models fall back to
    :func:`sigma_star_ascent`, a lower estimate.
    """
    if restarts < 1:
        raise ModelError("restarts must be at least 1")
    data = _gaussian_data(model)
    if isinstance(data, CoefficientEnsemble):
        return sigma_star_ascent(data, restarts, max_iter, seed)
    return float(data.b.max())


# -- sigma tilde ---------------------------------------------------------------

def _tropp_generic(st: np.ndarray, u1, u2, u3) -> np.ndarray:
    # sum_k A_k U1 Psi(U2 A_k U3) with Psi(M) = sum_l A_l M A_l
    m = u2 @ st @ u3
    psi = np.einsum("lij,kjm,lmp->kip", st, m, st, optimize=True)
    return np.einsum("kij,jm,kmp->ip", st, u1, psi, optimize=True)


def _tropp_entrywise(bsq: np.ndarray, u1, u2, u3) -> np.ndarray:
    # Wick expansion of E[X U1 X' U2 X U3 X'] for independent entries with
    # variances bsq; E[X_ac X_fg] = bsq_ac ([f,g]=[a,c] + [f,g]=[c,a] - [a=c=f=g]).
    d = np.diag(bsq)
    t = u2.T * (bsq @ (u1 * u3) @ bsq)                                  # X1 Y1
    q = np.matmul(u3[None, :, :] * bsq[:, None, :], u2)                  # q[b,c,a]
    t = t + np.einsum("ac,cb,bca->ab", bsq, u1, q)                       # X1 Y2
    t = t - u2.T * (bsq @ (u1 * u3)) * d[None, :]                        # X1 Y3
    r = np.matmul(u1[None, :, :] * bsq.T[:, None, :], u3.T)              # r[b,c,a]
    t = t + np.einsum("ac,bc,bca->ab", bsq, u2, r)                       # X2 Y1
    t = t + np.einsum("ac,cb,bac->ab", bsq, u1, q)                       # X2 Y2
    t = t - (bsq @ (u1 * u2.T)) * u3 * d[None, :]                        # X2 Y3
    t = t - d[:, None] * u2.T * ((u1 * u3) @ bsq)                        # X3 Y1
    t = t - d[:, None] * u1 * (bsq @ (u2 * u3.T)).T                      # X3 Y2
    t = t + d[:, None] * d[None, :] * u1 * u2.T * u3                     # X3 Y3
    return t


def tropp_matrix(ens: CoefficientEnsemble, u1, u2, u3) -> np.ndarray:
    """``sum_{k,l} A_k U1 A_l U2 A_k U3 A_l``."""
    vp = pattern_from_coefficients(ens)
    if vp is not None:
        return _tropp_entrywise(vp.b ** 2, u1, u2, u3)
    return _tropp_generic(ens.stack, u1, u2, u3)


def sigma_tilde_estimate(ens: CoefficientEnsemble, restarts: int = 4, max_iter: int = 60,
                         seed: int = 0) -> float:
    """Lower estimate of sigma_tilde.

    Commuting unitary triples are parametrized as ``U_i = W diag(exp(i theta_i)) W^*``
    with a shared unitary ``W``. Restart ``r`` draws ``W`` (Haar, or the
    identity for ``r = 0``) and phases from ``default_rng([seed, r])``, then
    refines the phases coordinate-wise using at most ``max_iter`` objective
    evaluations. The identity triple is always a candidate. Adding restarts
    can only add candidates, so the result is monotone in ``restarts``.
    """
    if restarts < 0 or max_iter < 0:
        raise ModelError("restarts and max_iter must be nonnegative")
    n = ens.n
    vp = pattern_from_coefficients(ens)
    if vp is not None:
        bsq = vp.b ** 2

        def tmat(u1, u2, u3):
            return _tropp_entrywise(bsq, u1, u2, u3)
    else:
        st = ens.stack

        def tmat(u1, u2, u3):
            return _tropp_generic(st, u1, u2, u3)

    def value(w, theta):
        us = [(w * np.exp(1j * th)) @ w.conj().T for th in theta]
        return float(np.linalg.norm(tmat(*us), 2))

    eye = np.eye(n)
    best = float(np.linalg.norm(tmat(eye, eye, eye), 2))
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        w = eye.astype(complex) if r == 0 else unitary_group.rvs(n, random_state=rng) if n > 1 \
            else np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
        theta = rng.uniform(0.0, 2 * np.pi, size=(3, n))
        cur = value(w, theta)
        evals = 1
        delta = np.pi / 2
        while evals < max_iter and delta > 1e-3:
            improved = False
            for idx in rng.permutation(3 * n):
                if evals >= max_iter:
                    break
                i, j = divmod(int(idx), n)
                for sgn in (1.0, -1.0):
                    trial = theta.copy()
                    trial[i, j] += sgn * delta
                    val = value(w, trial)
                    evals += 1
                    if val > cur:
                        theta, cur, improved = trial, val, True
                        break
                    if evals >= max_iter:
                        break
            if not improved:
                delta *= 0.5
        best = max(best, cur)
    return best ** 0.25


def effective_rank(cm: CovarianceModel) -> EffectiveRankResult:
    ev = np.linalg.eigvalsh(cm.sigma)
    norm = float(max(abs(ev[0]), abs(ev[-1])))
    if norm == 0.0:
        raise ModelError("zero covariance has no effective rank (degenerate covariance)")
    trace = float(np.trace(cm.sigma))
    return EffectiveRankResult(trace, norm, trace / norm)


def structural_params(model: MatrixModel, tilde: bool | None = None, seed: int = 0,
                      star_restarts: int = 32, star_iter: int = 500,
                      tilde_restarts: int = 4, tilde_iter: int = 60) -> StructuralParams:
    """All structural parameters of a Gaussian-type model.

    ``tilde=None`` estimates sigma_tilde only when ``n <= SIGMA_TILDE_MAX_N``.
    """
    data = _gaussian_data(model)
    if tilde is None:
        tilde = model.n <= SIGMA_TILDE_MAX_N
    if isinstance(data, CoefficientEnsemble):
        ens = data
        entry_sd = np.sqrt(np.einsum("kij,kij->ij", ens.stack, ens.stack))
        row_l2 = np.sqrt(np.diag(ens.second_moment()))
        row_l4 = np.sum(entry_sd ** 4, axis=1) ** 0.25
        max_entry = float(entry_sd.max())
        vp = pattern_from_coefficients(ens)
        if vp is not None:
            s_star, exact = float(vp.b.max()), True
        else:
            s_star, exact = sigma_star_ascent(ens, star_restarts, star_iter, seed), False
    else:
        row_l2, row_l4, max_entry = row_profiles(data)
        s_star, exact = max_entry, True
        ens = None
        if tilde and max_entry > 0:
            from .model import coefficients_from_pattern
            ens = coefficients_from_pattern(data)
    s = sigma(model)
    s_tilde = None
    if tilde:
        s_tilde = 0.0 if ens is None else sigma_tilde_estimate(ens, tilde_restarts, tilde_iter, seed)
    return StructuralParams(s, s_star, s_tilde, row_l2, row_l4, max_entry, exact)
