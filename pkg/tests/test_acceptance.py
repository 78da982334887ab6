"""Acceptance criteria, each run at its stated tolerance.

Every criterion prints one ``PASS``/``FAIL`` line (collected in the pytest
terminal summary, or printed directly by ``python3 tests/test_acceptance.py``).
Criterion 13 is a report-only gate: it is logged but never fails the run.
"""
from __future__ import annotations

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

if __package__ in (None, ""):
    sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
    from tests import oracles  # noqa: E402
else:
    from . import oracles

from structnorm.covariance import kl_sweep
from structnorm.model import (SparsityGraph, build_block, build_diagonal, build_rademacher,
                              build_sparse_wigner, build_wigner, coefficients_from_pattern,
                              random_sparse_graph, VariancePattern)
from structnorm.moments import (compression_check, direct_trace_moment, nck_moment_check,
                                shape_trace_moment)
from structnorm.report import benchmark_block_sweep, conjecture_probe
from structnorm.sampler import (esd_histogram, mc_norm, mc_norm_squared, mc_variance_check,
                                semicircle_density, tv_distance)
from structnorm.structural import sigma, sigma_tilde_estimate

CRITERIA = {}
REPORT_ONLY = {13}


def criterion(num: int, title: str):
    def wrap(fn):
        CRITERIA[num] = (title, fn)
        return fn
    return wrap


def zoo():
    return [build_wigner(64), build_diagonal(256), build_block(256, 16),
            build_sparse_wigner(random_sparse_graph(128, 0.05, seed=0))]


def small_graphs():
    for n in range(1, 5):
        for loops in (False, True):
            for edges in oracles.all_graphs(n, loops):
                yield SparsityGraph(n, frozenset(edges), allow_loops=loops)


@criterion(1, "Wigner(500) edge constant: MC mean / (2 sqrt 500) in [0.90, 1.00], < 5 min")
def c1():
    t0 = time.perf_counter()
    est = mc_norm(build_wigner(500), 100, seed=1)
    dt = time.perf_counter() - t0
    ratio = est.mean / (2 * math.sqrt(500))
    return 0.90 <= ratio <= 1.00 and dt < 300, f"ratio={ratio:.4f} runtime={dt:.1f}s"


@criterion(2, "diagonal oracle: MC mean within 3 SE of quadrature, n in {10, 100, 1000}")
def c2():
    ok, parts = True, []
    for n in (10, 100, 1000):
        est = mc_norm(build_diagonal(n), 200, seed=2)
        ref = oracles.expected_max_abs_normal(n)
        z = abs(est.mean - ref) / est.std_error
        ok &= z <= 3
        parts.append(f"n={n}: {est.mean:.4f} vs {ref:.4f} ({z:.2f} SE)")
    return ok, "; ".join(parts)


@criterion(3, "block benchmark n=1024: ratios in [0.35, 2.5]; gine ratio > 0.3 and latala ratio < 0.3 at k=1")
def c3():
    res = benchmark_block_sweep(1024, [1, 4, 16, 64, 256, 1024], 50, seed=3)
    bench = res.ratios["benchmark"]
    in_band = all(0.35 <= r <= 2.5 for r in bench)
    gine, latala = res.ratios["gine"][0], res.ratios["latala"][0]
    detail = (f"benchmark ratios={[round(r, 3) for r in bench]} "
              f"gine(k=1)={gine:.3f} latala(k=1)={latala:.3f}")
    return in_band and gine > 0.3 and latala < 0.3, detail


@criterion(4, "exact oracle equality on all graphs with <= 4 vertices, p in {1,2,3}, both laws")
def c4():
    checked = failures = 0
    for g in small_graphs():
        for p in (1, 2, 3):
            for law in ("gaussian", "rademacher"):
                checked += 1
                if shape_trace_moment(g, p, law).value != direct_trace_moment(g.adjacency, p, law).value:
                    failures += 1
    return failures == 0, f"{checked} instances, {failures} failures"


@criterion(5, "NCK moment inequality on 100 random rational patterns, equality at p=1")
def c5():
    r = np.random.default_rng(5)
    fails, worst_p1 = 0, 0.0
    for _ in range(100):
        n = int(r.integers(1, 5))
        num = r.integers(0, 4, size=(n, n))
        den = r.integers(1, 4, size=(n, n))
        b = np.triu(num / den)
        b = b + np.triu(b, 1).T
        if not b.any():
            b[0, 0] = 1.0
        ens = coefficients_from_pattern(VariancePattern(b))
        for p in (1, 2, 3):
            c = nck_moment_check(ens, p)
            fails += not c.holds
            if p == 1:
                worst_p1 = max(worst_p1, float(abs(c.lhs - c.rhs) / c.rhs))
    return fails == 0 and worst_p1 <= 1e-9, f"violations={fails} max p=1 rel gap={worst_p1:.2e}"


@criterion(6, "dimension compression holds on all graphs with <= 4 vertices, p <= 2")
def c6():
    checked = fails = 0
    for g in small_graphs():
        for p in (1, 2):
            checked += 1
            fails += not compression_check(g, p).holds
    return fails == 0, f"{checked} instances, {fails} violations"


@criterion(7, "Jensen: mean ||X||^2 >= sigma^2 - 3 SE on the standard zoo")
def c7():
    ok, parts = True, []
    for i, m in enumerate(zoo()):
        est = mc_norm_squared(m, 200, seed=70 + i)
        s2 = sigma(m) ** 2
        ok &= est.mean >= s2 - 3 * est.std_error
        parts.append(f"{m.name}: {est.mean:.2f} >= {s2:.2f}")
    return ok, "; ".join(parts)


@criterion(8, "variance: Var ||X|| <= 1.5 sigma_*^2 on the zoo at 500 samples")
def c8():
    ok, parts = True, []
    for i, m in enumerate(zoo()):
        vc = mc_variance_check(m, 500, seed=80 + i)
        ok &= vc.var_hat <= 1.5 * vc.sigma_star_sq
        parts.append(f"{m.name}: {vc.var_hat:.3f} vs {vc.sigma_star_sq:.3f}")
    return ok, "; ".join(parts)


@criterion(9, "sigma_tilde probe: estimate <= sigma (1 + 1e-6), estimate / n^(1/4) in [0.3, 5]")
def c9():
    ok, parts = True, []
    for n in (8, 16, 32, 64):
        m = build_wigner(n)
        est = sigma_tilde_estimate(coefficients_from_pattern(m.pattern), seed=9)
        ratio = est / n ** 0.25
        ok &= est <= sigma(m) * (1 + 1e-6) and 0.3 <= ratio <= 5
        parts.append(f"n={n}: {ratio:.4f}")
    return ok, "; ".join(parts)


@criterion(10, "semicircle ESD: TV(Wigner(400), 20 samples) < 0.05")
def c10():
    tv = tv_distance(esd_histogram(build_wigner(400), 20, 60, seed=10), semicircle_density)
    return tv < 0.05, f"TV={tv:.4f}"


@criterion(11, "effective-rank bracket: ratios in [0.1, 10]; d=1 point within 3 SE of chi-square oracle")
def c11():
    ns = [8, 64, 512]
    ratios = []
    for name, sig in (("I4", np.eye(4)), ("I64", np.eye(64)),
                      ("geo16", np.diag(2.0 ** -np.arange(16)))):
        ratios += [(name, r.model.n, r.ratio) for r in kl_sweep(sig, ns, 100, seed=11)]
    for i, n in enumerate(ns):
        d = 8 * n
        reps = 100 if d <= 2000 else 20
        run = kl_sweep(np.eye(d), [n], reps, seed=110 + i)[0]
        ratios.append((f"I{d}", n, run.ratio))
    ok = all(0.1 <= r <= 10 for *_, r in ratios)
    zs = []
    for i, run in enumerate(kl_sweep(np.eye(1), ns, 100, seed=111)):
        e = run.deviation_estimate
        zs.append(abs(e.mean - oracles.expected_abs_chi2_deviation(run.model.n)) / e.std_error)
    ok &= all(z <= 3 for z in zs)
    lo = min(ratios, key=lambda t: t[2])
    hi = max(ratios, key=lambda t: t[2])
    return ok, (f"ratio range [{lo[2]:.3f} ({lo[0]}, n={lo[1]}), {hi[2]:.3f} ({hi[0]}, n={hi[1]})]; "
                f"d=1 deviations in SE: {[round(z, 2) for z in zs]}")


@criterion(12, "subgaussian domination on the criterion-4 instances; Rademacher diagonal(4096) mean <= 1.3")
def c12():
    checked = fails = 0
    for g in small_graphs():
        for p in (1, 2, 3):
            checked += 1
            rad = shape_trace_moment(g, p, "rademacher").value
            fails += rad > shape_trace_moment(g, p, "gaussian").value
    est = mc_norm(build_rademacher(np.eye(4096)), 50, seed=12)
    return fails == 0 and est.mean <= 1.3, f"{checked} instances, {fails} violations; mean={est.mean:.4f}"


@criterion(13, "conjecture probes (report only): ratios to conj1 and to max row norm in [0.2, 5]")
def c13():
    rows = conjecture_probe(zoo(), 100, seed=13)
    ok = all(0.2 <= r.conj1_ratio <= 5 and 0.2 <= r.conj2_ratio <= 5 for r in rows)
    return ok, "; ".join(f"{r.model_id}: conj1={r.conj1_ratio:.3f} conj2={r.conj2_ratio:.3f}"
                         for r in rows)


def run_criterion(num: int):
    title, fn = CRITERIA[num]
    passed, detail = fn()
    if num in REPORT_ONLY:
        status = "PASS" if passed else "FAIL (report only)"
    else:
        status = "PASS" if passed else "FAIL"
    return passed, f"[{status}] criterion {num}: {title} -- {detail}"


@pytest.mark.parametrize("num", sorted(CRITERIA))
def test_criterion(num, acceptance_log):
    passed, line = run_criterion(num)
    acceptance_log.append(line)
    print(line)
    if num not in REPORT_ONLY:
        assert passed, line


if __name__ == "__main__":
    results = [run_criterion(n) for n in sorted(CRITERIA)]
    for _, line in results:
        print(line, flush=True)
    sys.exit(0 if all(p for (p, _), n in zip(results, sorted(CRITERIA)) if n not in REPORT_ONLY) else 1)
