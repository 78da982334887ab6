"""Experiment orchestration: sweeps, conjecture probes and file-driven runs."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import BOUND_NAMES, BoundReport, eval_conjecture1, full_report
from .covariance import kl_sweep, mc_deviation, runs_to_csv
from .errors import BudgetError, ModelError, NumericError
from .model import (COVARIANCE, GAUSSIAN, SPARSE, MatrixModel, build_block,
                    coefficients_from_pattern, load_model)
from .moments import (LAWS, compression_check, direct_trace_moment, nck_moment_check,
                      shape_rows, shape_trace_moment, subgaussian_comparison_check)
from .sampler import (MCEstimate, default_samples, derive_seed, esd_histogram, mc_norm,
                      mc_norm_moment, mc_variance_check, normal_density, sample_statistics,
                      semicircle_density, tv_distance)
from .structural import effective_rank, sigma, structural_params

__all__ = ["SweepResult", "ProbeRow", "benchmark_block_sweep", "conjecture_probe",
           "dumps_report", "RunOptions", "run_from_file", "EXIT_OK", "EXIT_PARSE",
           "EXIT_BUDGET", "EXIT_NUMERIC"]

EXIT_OK, EXIT_PARSE, EXIT_BUDGET, EXIT_NUMERIC = 0, 2, 3, 4


def _round(obj):
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(f"{obj:.12g}")
    if isinstance(obj, (np.floating,)):
        return _round(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def dumps_report(obj) -> str:
    """JSON with insertion key order and floats rounded to 12 significant digits."""
    return json.dumps(_round(obj), indent=2) + "\n"


def benchmark_value(n: int, k: int) -> float:
    """``sqrt(k) + sqrt(log n)``, the two-sided benchmark for block matrices."""
    return math.sqrt(k) + math.sqrt(max(math.log(n), 1.0))


@dataclass
class SweepResult:
    sweep_id: str
    axis: list
    reports: list
    estimates: list
    ratios: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "sweep_id": self.sweep_id,
            "axis": self.axis,
            "points": [{"k": k, "mc": e.to_dict(), "bounds": r.to_dict()}
                       for k, e, r in zip(self.axis, self.estimates, self.reports)],
            "ratios": self.ratios,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.ratios)
        w.writerow(["k", "mc_mean", "mc_se"] + [f"ratio_{nm}" for nm in names])
        for i, k in enumerate(self.axis):
            e = self.estimates[i]
            row = [k, f"{e.mean:.12g}", f"{e.std_error:.12g}"]
            for nm in names:
                v = self.ratios[nm][i]
                row.append("" if v is None else f"{v:.12g}")
            w.writerow(row)
        return buf.getvalue()


def _ratios(mean: float, rep: BoundReport) -> dict:
    out = {}
    for nm in BOUND_NAMES:
        e = rep.entries[nm]
        out[nm] = mean / e.value if e.applicable and e.value > 0 else None
    return out


def benchmark_block_sweep(n: int, k_values, n_samples: int | None = None, seed: int = 0,
                          workers: int = 1) -> SweepResult:
    """Block-diagonal sweep over block sizes ``k``; ratios are ``MC mean / expression``.

    The ``benchmark`` ratio divides by ``sqrt(k) + sqrt(log n)``; every
    applicable bound contributes its own ratio list (None where inapplicable).
    """
    ks = sorted(set(int(k) for k in k_values))
    if not ks:
        raise ModelError("k_values must be nonempty")
    models = [build_block(n, k) for k in ks]
    n_samples = n_samples or default_samples(n)
    reports, ests = [], []
    ratios = {"benchmark": []}
    ratios.update({nm: [] for nm in BOUND_NAMES})
    for i, (k, m) in enumerate(zip(ks, models)):
        params = structural_params(m, tilde=False)
        est = mc_norm(m, n_samples, derive_seed(seed, i), workers)
        rep = full_report(m, params)
        reports.append(rep)
        ests.append(est)
        ratios["benchmark"].append(est.mean / benchmark_value(n, k))
        for nm, v in _ratios(est.mean, rep).items():
            ratios[nm].append(v)
    ratios = {k: v for k, v in ratios.items() if any(x is not None for x in v)}
    return SweepResult(f"block_{n}", ks, reports, ests, ratios)


@dataclass
class ProbeRow:
    model_id: str
    norm: MCEstimate
    max_entry: MCEstimate
    row_norm_max: MCEstimate
    sigma: float
    conj1_value: float | None
    two_term_value: float
    conj1_ratio: float | None
    two_term_ratio: float | None
    conj2_ratio: float | None

    def to_dict(self) -> dict:
        return {"model_id": self.model_id, "mc_norm": self.norm.to_dict(),
                "mc_max_entry": self.max_entry.to_dict(),
                "mc_row_norm_max": self.row_norm_max.to_dict(), "sigma": self.sigma,
                "conj1_value": self.conj1_value, "sigma_plus_max_entry": self.two_term_value,
                "conj1_ratio": self.conj1_ratio, "two_term_ratio": self.two_term_ratio,
                "conj2_ratio": self.conj2_ratio}


def _ratio(a: float, b: float | None):
    return a / b if b else None


def conjecture_probe(models, n_samples: int | None = None, seed: int = 0,
                     workers: int = 1) -> list:
    """Monte Carlo ``E||X||`` against the two conjectured two-sided expressions.

    Per model: ``conj1_ratio = E||X|| / eval_conjecture1``,
    ``two_term_ratio = E||X|| / (sigma + E max|X_ij|)`` and
    ``conj2_ratio = E||X|| / E max_i ||row_i||``. Ratios are None for zero models.
    """
    models = list(models)
    if not models:
        raise ModelError("models must be nonempty")
    rows = []
    for i, m in enumerate(models):
        ns = n_samples or default_samples(m.n)
        s = derive_seed(seed, i)
        st = sample_statistics(m, ns, s, ("norm", "max_entry", "row_norm_max"), workers)
        norm, mx, rn = (MCEstimate.from_values(st[k], s) for k in ("norm", "max_entry", "row_norm_max"))
        sig = sigma(m)
        c1 = eval_conjecture1(m.pattern) if m.pattern is not None else None
        two_term = sig + mx.mean
        rows.append(ProbeRow(m.name, norm, mx, rn, sig, c1, two_term,
                             _ratio(norm.mean, c1), _ratio(norm.mean, two_term),
                             _ratio(norm.mean, rn.mean)))
    return rows


def probe_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "mc_norm", "mc_norm_se", "mc_max_entry", "mc_row_norm_max", "sigma",
                "conj1_value", "conj1_ratio", "two_term_ratio", "conj2_ratio"])
    fmt = lambda v: "" if v is None else f"{v:.12g}"  # noqa: E731
    for r in rows:
        w.writerow([r.model_id, fmt(r.norm.mean), fmt(r.norm.std_error), fmt(r.max_entry.mean),
                    fmt(r.row_norm_max.mean), fmt(r.sigma), fmt(r.conj1_value),
                    fmt(r.conj1_ratio), fmt(r.two_term_ratio), fmt(r.conj2_ratio)])
    return buf.getvalue()


# -- file-driven runs ----------------------------------------------------------

COMMANDS = ("bounds", "mc", "moments", "sweep", "covariance", "probe")


@dataclass
class RunOptions:
    samples: int | None = None
    seed: int = 0
    out: str = "out"
    p: int | None = None
    bins: int = 60
    k_values: list | None = None
    n_values: list | None = None
    workers: int = 1
    plots: bool = True
    dump_shapes: bool = False


def _meta(model: MatrixModel, command: str, opts: RunOptions, samples) -> dict:
    return {"meta": {"seed": opts.seed, "samples": samples, "version": __version__,
                     "command": command, "model": model.name, "kind": model.kind, "n": model.n}}


def _cmd_bounds(model, opts, arts):
    doc = _meta(model, "bounds", opts, None)
    if model.kind == COVARIANCE:
        er = effective_rank(model.data)
        doc["structural"] = {"trace": er.trace, "norm": er.norm, "effective_rank": er.r}
        rep = full_report(model, None)
    else:
        params = structural_params(model, seed=opts.seed)
        doc["structural"] = params.to_dict()
        rep = full_report(model, params)
    doc["bounds"] = rep.to_dict()
    arts["bounds.csv"] = rep.to_csv()
    return doc


def _cmd_mc(model, opts, arts, figs):
    ns = opts.samples or default_samples(model.n)
    doc = _meta(model, "mc", opts, ns)
    if model.kind == COVARIANCE:
        est = mc_deviation(model.data, ns, opts.seed, opts.workers)
        doc["mc"] = {"deviation": est.to_dict(include_values=True)}
        return doc
    p = opts.p or max(1, math.ceil(math.log(model.n)))
    st = sample_statistics(model, ns, opts.seed, ("norm", "max_entry", "row_norm_max"),
                           opts.workers)
    mc = {k: MCEstimate.from_values(v, opts.seed).to_dict() for k, v in st.items()}
    mc["norm"]["values"] = st["norm"].tolist()
    mc["norm_moment"] = dict(mc_norm_moment(model, p, ns, opts.seed, opts.workers).to_dict(), p=p)
    if model.is_gaussian and ns >= 50:
        vc = mc_variance_check(model, ns, opts.seed, opts.workers)
        mc["variance_check"] = {"var_hat": vc.var_hat, "sigma_star_sq": vc.sigma_star_sq,
                                "var_se": vc.var_se}
    params = structural_params(model, tilde=False, seed=opts.seed)
    doc["structural"] = params.to_dict()
    rep = full_report(model, params, conj2_proxy=mc["row_norm_max"]["mean"])
    doc["bounds"] = rep.to_dict()
    doc["ratios"] = _ratios(mc["norm"]["mean"], rep)
    hist_samples = max(1, min(ns, 20))
    hist = esd_histogram(model, hist_samples, opts.bins, opts.seed)
    doc["esd"] = hist.to_dict()
    doc["esd"]["tv_semicircle"] = tv_distance(hist, semicircle_density)
    doc["esd"]["tv_normal"] = tv_distance(hist, normal_density)
    doc["mc"] = mc
    arts["esd.csv"] = _rows_csv(hist.csv_rows())
    arts["bounds.csv"] = rep.to_csv()
    figs.append(("esd.png", "esd", hist))
    figs.append(("norm_samples.png", "samples", (model.name, st["norm"], rep)))
    return doc


def _cmd_moments(model, opts, arts):
    p = opts.p or 2
    doc = _meta(model, "moments", opts, None)
    doc["p"] = p
    if model.kind == COVARIANCE or model.pattern is None:
        raise ModelError("moments need an entrywise model (pattern, graph or builder)")
    vp = model.pattern
    res = {}
    res["direct"] = {law: direct_trace_moment(vp, p, law).to_dict()
                     for law in LAWS}
    if model.kind == SPARSE:
        g = model.data
        res["shape"] = {law: shape_trace_moment(g, p, law).to_dict()
                        for law in LAWS}
        res["oracle_agreement"] = all(res["shape"][law]["value"] == res["direct"][law]["value"]
                                      for law in LAWS)
        res["compression"] = compression_check(g, p).to_dict()
        arts["shapes.csv"] = _rows_csv(shape_rows(p, g.allow_loops))
    elif opts.dump_shapes:
        arts["shapes.csv"] = _rows_csv(shape_rows(p, True))
    if vp.b.max() > 0:
        res["nck"] = nck_moment_check(coefficients_from_pattern(vp), p).to_dict()
    res["subgaussian"] = subgaussian_comparison_check(vp, p).to_dict()
    doc["moments"] = res
    return doc


def _default_ks(n: int) -> list:
    ks = [k for k in range(1, n + 1) if n % k == 0 and (k & (k - 1)) == 0 and
          (k.bit_length() - 1) % 2 == 0]
    return sorted(set(ks + [n]))


def _cmd_sweep(model, opts, arts, figs):
    if model.kind != GAUSSIAN:
        raise ModelError("sweep needs a Gaussian pattern model (wigner, diagonal or block)")
    n = model.n
    ks = opts.k_values or _default_ks(n)
    ns = opts.samples or default_samples(n)
    res = benchmark_block_sweep(n, ks, ns, opts.seed, opts.workers)
    doc = _meta(model, "sweep", opts, ns)
    doc["sweep"] = res.to_dict()
    arts["sweep.csv"] = res.to_csv()
    figs.append(("sweep.png", "sweep", res))
    return doc


def _cmd_covariance(model, opts, arts, figs):
    if model.kind != COVARIANCE:
        raise ModelError("covariance command needs a covariance model")
    ns = opts.samples or 100
    n_values = opts.n_values or [model.data.n]
    runs = kl_sweep(model.data.sigma, n_values, ns, opts.seed, opts.workers)
    doc = _meta(model, "covariance", opts, ns)
    doc["covariance"] = [r.to_dict() for r in runs]
    arts["covariance.csv"] = runs_to_csv(runs)
    figs.append(("covariance.png", "covariance", runs))
    return doc


def _cmd_probe(model, opts, arts, figs):
    if model.kind == COVARIANCE:
        raise ModelError("probe needs a matrix model")
    ns = opts.samples or default_samples(model.n)
    rows = conjecture_probe([model], ns, opts.seed, opts.workers)
    doc = _meta(model, "probe", opts, ns)
    doc["probe"] = [r.to_dict() for r in rows]
    arts["probe.csv"] = probe_csv(rows)
    return doc


def _rows_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def run_from_file(path, command: str, opts: RunOptions | None = None):
    """Run ``command`` on the model file at ``path``.

    Writes ``report.json`` plus command-specific CSV tables (and PNG figures
    when ``opts.plots``) into ``opts.out``. Returns ``(exit_code, message)``.
    """
    opts = opts or RunOptions()
    try:
        if command not in COMMANDS:
            raise ModelError(f"unknown command {command!r}; expected one of {COMMANDS}")
        try:
            model = load_model(path)
        except OSError as exc:
            raise ModelError(f"cannot read model file: {exc}") from exc
        arts, figs = {}, []
        if command == "bounds":
            doc = _cmd_bounds(model, opts, arts)
        elif command == "mc":
            doc = _cmd_mc(model, opts, arts, figs)
        elif command == "moments":
            doc = _cmd_moments(model, opts, arts)
        elif command == "sweep":
            doc = _cmd_sweep(model, opts, arts, figs)
        elif command == "covariance":
            doc = _cmd_covariance(model, opts, arts, figs)
        else:
            doc = _cmd_probe(model, opts, arts, figs)
    except ModelError as exc:
        return EXIT_PARSE, f"error: {exc}"
    except BudgetError as exc:
        return EXIT_BUDGET, f"budget exceeded: {exc}"
    except (NumericError, FloatingPointError) as exc:
        return EXIT_NUMERIC, f"numeric error: {exc}"

    out = Path(opts.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(dumps_report(doc))
    for name, text in arts.items():
        (out / name).write_text(text)
    if opts.plots and figs:
        from . import plotting
        for fname, kind, payload in figs:
            plotting.render(kind, payload, out / fname)
    written = ["report.json"] + list(arts) + ([f for f, _, _ in figs] if opts.plots else [])
    return EXIT_OK, "wrote " + ", ".join(str(out / w) for w in written)
