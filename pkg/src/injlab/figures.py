"""Figure rendering for the report path.

Figures are rendered from already-computed rows, after the data file is
written, so enabling them never perturbs the delimited output.  Everything
goes through the Agg backend and lands as PNG files in the requested
directory.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .constants import Field, mu_p, sigma_p, solve_e0, solve_gamma

__all__ = ["render"]


def _save(fig, outdir: Path, name: str) -> str:
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / f"{name}.png"
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return str(path)


def _fig_constants(cfg, cols, rows, outdir):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4))
    u = np.linspace(0, 3.2, 400)
    for p in sorted({int(r["p"]) for r in rows}):
        ax1.plot(u, [sigma_p(p, x) for x in u], label=f"p={p}")
        e0 = solve_e0(p)
        ax1.plot([e0], [0.0], "k.", ms=5)
    ax1.axhline(0.0, color="0.7", lw=0.8)
    ax1.set_xlabel("u")
    ax1.set_ylabel("complexity rate")
    ax1.legend(fontsize=7)
    ps = np.unique(np.geomspace(3, 1000, 40).astype(int))
    for kind, style in ((Field.REAL, "-"), (Field.COMPLEX, "--")):
        ax2.plot(ps, [solve_gamma(int(p), cfg.d, kind) / math.sqrt(math.log(p)) for p in ps],
                 style, label=kind.value)
    ax2.set_xscale("log")
    ax2.set_xlabel("p")
    ax2.set_ylabel("rate constant / sqrt(log p)")
    ax2.legend(fontsize=7)
    fig.tight_layout()
    return [_save(fig, outdir, "constants")]


def _fig_esd(cfg, eigs, outdir):
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    lam = np.concatenate(eigs)
    ax.hist(lam, bins=80, density=True, alpha=0.6, label="empirical spectrum")
    xs = np.linspace(lam.min() - 0.1, lam.max() + 0.1, 400)
    ax.plot(xs, [mu_p(cfg.p, 0.0, x) for x in xs], "r-", lw=1.3, label="limit density")
    ax.set_xlabel("eigenvalue")
    ax.legend(fontsize=8)
    return [_save(fig, outdir, f"esd_{cfg.model}_d{cfg.d}_p{cfg.p}")]


def _fig_injnorm(cfg, cols, rows, outdir):
    key = "value_over_sqrt_d" if "value_over_sqrt_d" in cols else "inj_norm"
    vals = [float(r[key]) for r in rows]
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.hist(vals, bins=max(10, len(vals) // 5), alpha=0.7)
    if key == "value_over_sqrt_d":
        alpha = math.sqrt(cfg.p) * solve_e0(cfg.p)
        ax.axvline(alpha, color="r", ls="--", label="analytic bound")
        ax.legend(fontsize=8)
    ax.set_xlabel(key)
    return [_save(fig, outdir, f"injnorm_p{cfg.p}_d{cfg.d}_{cfg.field.value}")]


def _fig_kr(cfg, est, outdir):
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    n = len(est.grid_u)
    c = cfg.p * (cfg.d - 1) / 2.0 if cfg.field is Field.REAL else float(cfg.p * (cfg.d - 1))
    integrand = est.grid_log_mean_det - c * est.grid_u**2
    ax.plot(est.grid_u, integrand, "o-", ms=2.5, lw=0.9)
    ax.set_xlabel("u")
    ax.set_ylabel("log integrand")
    ax.set_title(f"log bound {est.log_bound:.4g}  ({n} grid points)", fontsize=9)
    return [_save(fig, outdir, f"kac_rice_p{cfg.p}_d{cfg.d}_{cfg.field.value}")]


def _fig_audit(cfg, rep, outdir):
    fig, ax = plt.subplots(figsize=(6.2, 3.4))
    names = [c.name for c in rep.classes]
    zs = [min(c.z, 6.0) for c in rep.classes]
    ax.barh(range(len(names)), zs)
    ax.axvline(3.0, color="r", ls="--", lw=1)
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names, fontsize=7)
    ax.set_xlabel("|z|")
    fig.tight_layout()
    return [_save(fig, outdir, f"audit_p{cfg.p}_d{cfg.d}_{cfg.field.value}")]


def _fig_rows_line(cfg, cols, rows, outdir, xcol, ycol, name, refline=None):
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    xs = [float(r[xcol]) for r in rows]
    ys = [float(r[ycol]) for r in rows]
    ax.plot(xs, ys, "o", ms=3)
    if refline is not None:
        ax.axhline(refline, color="r", ls="--", lw=1)
    ax.set_xlabel(xcol)
    ax.set_ylabel(ycol)
    return [_save(fig, outdir, name)]


def render(fig_spec, cfg, cols, rows, outdir: Path) -> list[str]:
    """Render the figure(s) for one completed run; returns file paths."""
    if isinstance(fig_spec, tuple):
        tag, payload = fig_spec
    else:
        tag, payload = fig_spec, None
    if tag == "constants":
        return _fig_constants(cfg, cols, rows, outdir)
    if tag == "esd":
        return _fig_esd(cfg, payload, outdir)
    if tag == "injnorm" or tag == "envelope":
        return _fig_injnorm(cfg, cols, rows, outdir)
    if tag == "kr":
        return _fig_kr(cfg, payload, outdir)
    if tag == "audit":
        return _fig_audit(cfg, payload, outdir)
    if tag == "esdconv":
        return _fig_rows_line(cfg, cols, rows, outdir, "d_block", "esd_w1", "esd_convergence")
    if tag == "trend":
        ref = rows[0]["laplace_prediction"] if rows else None
        return _fig_rows_line(cfg, cols, rows, outdir, "d", "per_coordinate_rate",
                              "kr_laplace_trend", refline=ref)
    if tag == "coherence":
        return _fig_rows_line(cfg, cols, rows, outdir, "d", "bound", "p2_coherence")
    if tag == "tensor":
        return _fig_rows_line(cfg, cols, rows, outdir, "trial", "hs_sq_over_dp",
                              "hs_concentration", refline=1.0)
    return []
