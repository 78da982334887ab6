"""PNG figures for report artifacts, rendered off-screen with the Agg backend."""
from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .sampler import normal_density, semicircle_density  # noqa: E402

__all__ = ["render", "plot_esd", "plot_norm_samples", "plot_sweep", "plot_covariance"]


def _save(fig, path):
    fig.tight_layout()
    # fixed metadata keeps repeated runs byte-identical
    fig.savefig(Path(path), dpi=100, metadata={"Software": None})
    plt.close(fig)


def plot_esd(hist, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    centers = 0.5 * (hist.edges[:-1] + hist.edges[1:])
    ax.bar(centers, hist.density, width=np.diff(hist.edges), color="0.75", edgecolor="0.4",
           label=f"eigenvalues / {hist.scale:.3g}")
    x = np.linspace(hist.edges[0], hist.edges[-1], 400)
    ax.plot(x, semicircle_density(x), label="semicircle")
    ax.plot(x, normal_density(x), "--", label="standard normal")
    ax.set_xlabel("scaled eigenvalue")
    ax.set_ylabel("density")
    ax.legend()
    _save(fig, path)


def plot_norm_samples(payload, path):
    name, values, rep = payload
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(values, bins=max(10, int(math.sqrt(len(values)))), color="0.7", edgecolor="0.3")
    ax.axvline(float(np.mean(values)), color="k", label="Monte Carlo mean")
    applicable = [(nm, e.value) for nm, e in rep.entries.items() if e.applicable and e.value > 0]
    for i, (nm, v) in enumerate(applicable):
        ax.axvline(v, linestyle=":", label=nm, color=f"C{i % 10}")
    ax.set_xlabel("||X||")
    ax.set_title(name or "model")
    ax.legend(fontsize="small")
    _save(fig, path)


def plot_sweep(res, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    for nm, vals in res.ratios.items():
        pts = [(k, v) for k, v in zip(res.axis, vals) if v is not None]
        if pts:
            ks, vs = zip(*pts)
            ax.plot(ks, vs, "o-", label=nm)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("block size k")
    ax.set_ylabel("MC mean / expression")
    ax.legend(fontsize="small")
    _save(fig, path)


def plot_covariance(runs, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    n = [r.model.n for r in runs]
    ax.errorbar(n, [r.deviation_estimate.mean for r in runs],
                yerr=[r.deviation_estimate.std_error for r in runs], fmt="o", label="Monte Carlo")
    ax.plot(n, [r.kl_value for r in runs], "s--", label="effective-rank expression")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("samples n")
    ax.set_ylabel("||Z - Sigma||")
    ax.legend()
    _save(fig, path)


_RENDERERS = {"esd": plot_esd, "samples": plot_norm_samples, "sweep": plot_sweep,
              "covariance": plot_covariance}


def render(kind: str, payload, path):
    _RENDERERS[kind](payload, path)
