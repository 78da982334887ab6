"""Constant-free bound expressions for ``E ||X||`` and ``E ||Z - Sigma||``.

Every expression is evaluated with its universal constant set to 1; only
ratios against Monte Carlo values are meaningful. Two conventions apply
throughout: ``log n`` is clamped below at 1, and row-indexed factors use
``sqrt(log(i + 1))`` for the 1-based row index ``i``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError
from .model import (COEFFICIENT, COVARIANCE, RADEMACHER, CovarianceModel, MatrixModel,
                    VariancePattern, pattern_from_coefficients)
from .structural import StructuralParams, effective_rank

__all__ = [
    "BOUND_NAMES", "BoundEntry", "BoundReport", "eval_nck", "eval_tropp", "eval_latala",
    "eval_gine", "eval_bvh", "eval_conjecture1", "eval_conjecture3", "eval_seginer",
    "eval_kl", "full_report",
]

BOUND_NAMES = ("nck_lower", "nck_upper", "tropp", "latala", "gine", "bvh", "conj1",
               "conj2_proxy", "seginer", "kl", "conj3")


def _log(n: int) -> float:
    return max(math.log(n), 1.0) if n >= 1 else 1.0


def _row_index_log(m: int) -> np.ndarray:
    # sqrt(log(i + 1)) for 1-based i = 1..m
    return np.sqrt(np.log(np.arange(2, m + 2)))


def eval_nck(sp: StructuralParams, n: int):
    """``(sigma, sigma sqrt(log n))``."""
    if n < 1:
        raise ModelError("n must be positive")
    return sp.sigma, sp.sigma * math.sqrt(_log(n))


def eval_tropp(sp: StructuralParams, n: int) -> float:
    """``sigma log^{1/4} n + sigma_tilde log^{1/2} n`` using the lower estimate of sigma_tilde."""
    if sp.sigma_tilde_lb is None:
        raise ModelError("sigma_tilde_lb was not estimated")
    L = _log(n)
    return sp.sigma * L ** 0.25 + sp.sigma_tilde_lb * L ** 0.5


def eval_latala(vp: VariancePattern) -> float:
    b = vp.b
    return float(np.sqrt(np.sum(b ** 2, axis=1)).max() + np.sum(b ** 4) ** 0.25)


def eval_gine(vp: VariancePattern) -> float:
    """Rows ordered by decreasing ``sum_j b_ij^4``, then ``max row_l2 + max_i row_l4_(i) sqrt(log(i+1))``."""
    b = vp.b
    row_l2 = np.sqrt(np.sum(b ** 2, axis=1))
    row_l4 = np.sort(np.sum(b ** 4, axis=1) ** 0.25)[::-1]
    return float(row_l2.max() + np.max(row_l4 * _row_index_log(vp.n)))


def eval_bvh(vp: VariancePattern, n: int | None = None) -> float:
    n = vp.n if n is None else n
    b = vp.b
    return float(np.sqrt(np.sum(b ** 2, axis=1)).max() + b.max() * math.sqrt(_log(n)))


def eval_conjecture1(vp: VariancePattern) -> float:
    """Rows ordered by decreasing ``max_j b_ij``, then ``max row_l2 + max_i (max_j b_ij) sqrt(log(i+1))``."""
    b = vp.b
    row_l2 = np.sqrt(np.sum(b ** 2, axis=1))
    row_max = np.sort(b.max(axis=1))[::-1]
    return float(row_l2.max() + np.max(row_max * _row_index_log(vp.n)))


def eval_conjecture3(sp: StructuralParams, n: int) -> float:
    return sp.sigma + sp.sigma_star * math.sqrt(_log(n))


def eval_seginer(vp: VariancePattern, n: int | None = None) -> float:
    n = vp.n if n is None else n
    return float(np.sqrt(np.sum(vp.b ** 2, axis=1)).max() * _log(n) ** 0.25)


def eval_kl(cm: CovarianceModel) -> float:
    """``||Sigma|| (sqrt(r/n) + r/n)`` with ``r`` the effective rank and ``n`` the sample count."""
    er = effective_rank(cm)
    x = er.r / cm.n
    return er.norm * (math.sqrt(x) + x)


@dataclass
class BoundEntry:
    value: float
    applicable: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {"value": self.value, "applicable": self.applicable, "note": self.note}


@dataclass
class BoundReport:
    model_id: str
    n: int
    entries: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> BoundEntry:
        return self.entries[name]

    def value(self, name: str) -> float:
        return self.entries[name].value

    def to_dict(self) -> dict:
        return {"model_id": self.model_id, "n": self.n,
                "entries": {k: self.entries[k].to_dict() for k in BOUND_NAMES if k in self.entries}}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bound", "value", "applicable", "note"])
        for k in BOUND_NAMES:
            if k in self.entries:
                e = self.entries[k]
                w.writerow([k, f"{e.value:.12g}", int(e.applicable), e.note])
        return buf.getvalue()


def full_report(model: MatrixModel, params: StructuralParams | None,
                conj2_proxy: float | None = None) -> BoundReport:
    """Evaluate every bound applicable to ``model``.

    Inapplicable entries are present with value 0 and ``applicable=False``.
    ``conj2_proxy`` is the Monte Carlo estimate of ``E max_i ||row_i(X)||``
    when one is available.
    """
    rep = BoundReport(model.name, model.n)
    ent = rep.entries
    for k in BOUND_NAMES:
        ent[k] = BoundEntry(0.0, False, "not applicable to this model kind")

    if model.kind == COVARIANCE:
        ent["kl"] = BoundEntry(eval_kl(model.data), True, f"samples n={model.data.n}")
        return rep
    if params is None:
        raise ModelError("structural parameters are required for matrix models")

    n = model.n
    lo, hi = eval_nck(params, n)
    sub = " (entries subgaussian; Gaussian bound transfers)" if model.kind == RADEMACHER else ""
    ent["nck_lower"] = BoundEntry(lo, True, "lower bound sigma" + sub)
    ent["nck_upper"] = BoundEntry(hi, True, "sigma sqrt(log n)" + sub)
    if params.sigma_tilde_lb is None:
        ent["tropp"] = BoundEntry(0.0, False, "sigma_tilde not estimated at this size")
    else:
        ent["tropp"] = BoundEntry(eval_tropp(params, n), True,
                                  "uses a lower estimate of sigma_tilde" + sub)
    ent["conj3"] = BoundEntry(eval_conjecture3(params, n), model.kind != RADEMACHER,
                              "conjectural; sigma_star is a lower estimate" if not params.sigma_star_exact
                              else "conjectural; sigma_star = max_ij b_ij")

    vp = model.pattern
    if model.kind == COEFFICIENT:
        vp = pattern_from_coefficients(model.data)
    if vp is None:
        return rep
    ent["latala"] = BoundEntry(eval_latala(vp), True, sub.strip())
    ent["gine"] = BoundEntry(eval_gine(vp), True, "rows ordered by sum_j b_ij^4")
    ent["bvh"] = BoundEntry(eval_bvh(vp, n), True, sub.strip())
    ent["conj1"] = BoundEntry(eval_conjecture1(vp), True, "conjectural; rows ordered by max_j b_ij")
    if conj2_proxy is not None:
        ent["conj2_proxy"] = BoundEntry(float(conj2_proxy), True,
                                        "Monte Carlo E max_i ||row_i(X)||")
    else:
        ent["conj2_proxy"] = BoundEntry(0.0, False, "needs a Monte Carlo estimate")
    ent["seginer"] = BoundEntry(eval_seginer(vp, n), model.kind == RADEMACHER,
                                "bounded entries only" if model.kind != RADEMACHER else "")
    return rep
