"""Experiment orchestration: config, dispatch, persistence, reproducibility.

Every subcommand maps trial indices through pure task functions whose
randomness comes only from keyed streams, so a data file is a function of
its config alone: re-running with the same config reproduces it
byte-for-byte at any ``INJLAB_THREADS`` setting.  The manifest (config
echo, wall time, summary statistics) is written next to the data file and
is the only place timing appears.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .constants import Field, constants_report, solve_e0
from .kac_rice import IntervalSet, covariance_audit, kr_bound
from .rmt import EnsembleKind, eigenvalues, esd_w1, sample_bhgoe, sample_tbhgoe
from .tensors import dist_sep as _dist_sep
from .tensors import estimate_injective_norm, gme as _gme, hs_norm, sample_tensor

SCHEMA_VERSION = "1"

__all__ = ["ExperimentConfig", "ResultManifest", "UsageError", "run", "thread_count", "pmap"]


class UsageError(ValueError):
    """Invalid configuration; the CLI maps this to exit code 2."""


@dataclass
class ExperimentConfig:
    subcommand: str
    p: int = 3
    d: int = 4
    field: Field = Field.REAL
    seed: int = 0
    trials: int = 1
    restarts: int = 32
    interval: tuple[float, float] | None = None
    grid: int | None = None
    samples: int = 200
    out_format: str = "json"
    out_path: str | None = None
    model: str = "bhgoe"
    name: str | None = None
    figures: str | None = None

    def validate(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise UsageError(f"unknown subcommand {self.subcommand!r}")
        if self.p < 2:
            raise UsageError("p must be >= 2")
        # for rmt, d is the ensemble block size and may be 1
        if self.d < (1 if self.subcommand == "rmt" else 2):
            raise UsageError("d out of range")
        if min(self.trials, self.restarts, self.samples) < 1:
            raise UsageError("counts must be >= 1")
        if self.seed < 0 or self.seed >= 2**64:
            raise UsageError("seed must fit in 64 bits")
        if self.out_format not in ("json", "csv"):
            raise UsageError("out format must be json or csv")
        if self.interval is not None and self.interval[0] > self.interval[1]:
            raise UsageError("interval endpoints must be ordered")

    def to_dict(self) -> dict:
        out = {
            "subcommand": self.subcommand,
            "p": self.p,
            "d": self.d,
            "field": self.field.value,
            "seed": self.seed,
            "trials": self.trials,
            "restarts": self.restarts,
            "interval": list(self.interval) if self.interval else None,
            "grid": self.grid,
            "samples": self.samples,
            "out_format": self.out_format,
            "out_path": self.out_path,
            "model": self.model,
            "name": self.name,
            "figures": self.figures,
        }
        return out


@dataclass
class ResultManifest:
    tool_version: str
    schema_version: str
    config: dict
    wall_time_seconds: float
    row_count: int
    columns: list[str]
    summary: dict
    data_path: str | None = None
    figure_paths: list[str] = field(default_factory=list)


def thread_count() -> int:
    raw = os.environ.get("INJLAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def pmap(fn, indices):
    """Order-preserving map over trial indices, threaded when INJLAB_THREADS > 1."""
    n = thread_count()
    if n <= 1:
        return [fn(i) for i in indices]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, indices))


# ---------------------------------------------------------------------------
# serialization: data files must be byte-stable
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        v = float(x)
        return v
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json_data(path: Path, subcommand: str, columns: list[str], rows: list[dict]) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "subcommand": subcommand,
        "columns": columns,
        "rows": [_jsonable({c: r[c] for c in columns}) for r in rows],
    }
    path.write_text(json.dumps(doc, indent=1, allow_nan=True) + "\n", encoding="utf-8")


def write_manifest(path: Path, manifest: ResultManifest) -> None:
    doc = {
        "tool_version": manifest.tool_version,
        "schema_version": manifest.schema_version,
        "config": manifest.config,
        "wall_time_seconds": manifest.wall_time_seconds,
        "row_count": manifest.row_count,
        "columns": manifest.columns,
        "summary": _jsonable(manifest.summary),
        "data_path": manifest.data_path,
        "figure_paths": manifest.figure_paths,
    }
    path.write_text(json.dumps(doc, indent=1, allow_nan=True) + "\n", encoding="utf-8")


def _summary_stats(rows: list[dict], col: str) -> dict:
    vals = np.array([float(r[col]) for r in rows], dtype=float)
    return {
        "mean": float(np.mean(vals)),
        "stderr": float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0,
        "min": float(np.min(vals)),
        "max": float(np.max(vals)),
    }


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------

def _run_constants(cfg: ExperimentConfig):
    rep = constants_report(cfg.p, cfg.d, cfg.field)
    row = rep.to_dict()
    residuals = row.pop("residuals")
    row["max_abs_residual"] = max(abs(v) for v in residuals.values())
    cols = list(row.keys())
    summary = {"residuals": residuals}
    return cols, [row], summary, "constants"


def _run_sample_tensor(cfg: ExperimentConfig):
    def task(i):
        t = sample_tensor(cfg.p, cfg.d, cfg.field, cfg.seed, index=i)
        hs = hs_norm(t)
        return {
            "trial": i,
            "hs_norm": hs,
            "hs_sq_over_dp": hs * hs / t.n_entries,
            "max_abs_entry": float(np.max(np.abs(t.entries))),
        }
    rows = pmap(task, range(cfg.trials))
    cols = ["trial", "hs_norm", "hs_sq_over_dp", "max_abs_entry"]
    return cols, rows, {"hs_sq_over_dp": _summary_stats(rows, "hs_sq_over_dp")}, "tensor"


def _run_inj_norm(cfg: ExperimentConfig):
    def task(i):
        t = sample_tensor(cfg.p, cfg.d, cfg.field, cfg.seed, index=i)
        est = estimate_injective_norm(t, restarts=cfg.restarts)
        return {
            "trial": i,
            "value": est.value,
            "value_over_sqrt_d": est.value / math.sqrt(cfg.d),
            "restarts": est.restarts_used,
            "iterations": est.iterations,
            "converged": est.converged,
        }
    rows = pmap(task, range(cfg.trials))
    cols = ["trial", "value", "value_over_sqrt_d", "restarts", "iterations", "converged"]
    summary = {"value_over_sqrt_d": _summary_stats(rows, "value_over_sqrt_d"),
               "alpha_p": math.sqrt(cfg.p) * solve_e0(cfg.p)}
    return cols, rows, summary, "injnorm"


def _run_gme(cfg: ExperimentConfig):
    def task(i):
        t = sample_tensor(cfg.p, cfg.d, cfg.field, cfg.seed, index=i)
        t.entries = t.entries / hs_norm(t)
        est = estimate_injective_norm(t, restarts=cfg.restarts)
        return {
            "trial": i,
            "inj_norm": est.value,
            "gme": _gme(t, est),
            "dist_sep": _dist_sep(t, est),
            "product_lower_bound": cfg.d ** (-(cfg.p - 1) / 2.0),
        }
    rows = pmap(task, range(cfg.trials))
    cols = ["trial", "inj_norm", "gme", "dist_sep", "product_lower_bound"]
    return cols, rows, {"gme": _summary_stats(rows, "gme")}, "injnorm"


def _run_rmt(cfg: ExperimentConfig):
    model = EnsembleKind(cfg.model)

    def task(i):
        if model is EnsembleKind.BHGOE:
            mat = sample_bhgoe(cfg.d, cfg.p, None, seed=cfg.seed, trial=i)
        else:
            mat = sample_tbhgoe(cfg.d, cfg.p, seed=cfg.seed, trial=i)
        spec = eigenvalues(mat)
        return {
            "trial": i,
            "n": spec.n,
            "op_norm": spec.op_norm,
            "esd_w1": esd_w1(spec, cfg.p),
            "lambda_min": float(spec.eigenvalues[0]),
            "lambda_max": float(spec.eigenvalues[-1]),
            "trace": float(np.sum(spec.eigenvalues)),
        }, spec.eigenvalues

    results = pmap(task, range(cfg.trials))
    rows = [r for r, _ in results]
    eigs = [e for _, e in results]
    cols = ["trial", "n", "op_norm", "esd_w1", "lambda_min", "lambda_max", "trace"]
    summary = {
        "op_norm": _summary_stats(rows, "op_norm"),
        "esd_w1": _summary_stats(rows, "esd_w1"),
        "edge": 2.0 * math.sqrt((cfg.p - 1.0) / cfg.p),
    }
    return cols, rows, summary, ("esd", eigs)


def _run_kac_rice(cfg: ExperimentConfig):
    if cfg.interval is None:
        e0 = solve_e0(cfg.p)
        dset = IntervalSet.of((e0 + 0.1, e0 + 0.2))
    else:
        dset = IntervalSet.of(cfg.interval)
    est = kr_bound(cfg.p, cfg.d, cfg.field, dset, grid_points=cfg.grid,
                   samples_per_point=cfg.samples, seed=cfg.seed)
    rows = [
        {"u": float(u), "log_mean_det": float(lm), "stderr_log": float(se)}
        for u, lm, se in zip(est.grid_u, est.grid_log_mean_det, est.grid_stderr_log)
    ]
    cols = ["u", "log_mean_det", "stderr_log"]
    n = cfg.p * (cfg.d - 1)
    summary = {
        "log_bound": est.log_bound,
        "mc_stderr_log": est.mc_stderr_log,
        "log_prefactor": est.log_prefactor,
        "grid_points": est.grid_points,
        "samples_per_point": est.samples_per_point,
        "laplace_prediction": est.laplace_prediction,
        "per_coordinate_rate": est.log_bound / n,
        "intervals": [list(iv) for iv in est.interval_set.intervals],
    }
    return cols, rows, summary, ("kr", est)


def _run_audit(cfg: ExperimentConfig):
    rep = covariance_audit(cfg.p, cfg.d, cfg.field, max(cfg.samples, 10**4), seed=cfg.seed)
    rows = [
        {"class": c.name, "count": c.count, "predicted": c.predicted,
         "empirical": c.empirical, "stderr": c.stderr, "z": c.z, "ok": c.ok}
        for c in rep.classes
    ]
    cols = ["class", "count", "predicted", "empirical", "stderr", "z", "ok"]
    summary = {
        "all_ok": rep.all_ok,
        "max_abs_deviation": rep.max_abs_deviation,
        "max_z": rep.max_z,
        "regression_slope": rep.regression_slope,
    }
    return cols, rows, summary, ("audit", rep)


# --- named experiment scenarios --------------------------------------------

def _scenario_constants_sweep(cfg: ExperimentConfig):
    rows = []
    for p in range(2, max(3, cfg.p) + 1):
        rep = constants_report(p, cfg.d, cfg.field)
        row = rep.to_dict()
        row["max_abs_residual"] = max(abs(v) for v in row.pop("residuals").values())
        rows.append(row)
    return list(rows[0].keys()), rows, {}, "constants"


def _scenario_esd_convergence(cfg: ExperimentConfig):
    rows = []
    for dblock in (50, 100, 200, 400):
        def task(i, dblock=dblock):
            spec = eigenvalues(sample_bhgoe(dblock, cfg.p, None, seed=cfg.seed, trial=i))
            return {"d_block": dblock, "trial": i, "esd_w1": esd_w1(spec, cfg.p)}
        rows.extend(pmap(task, range(cfg.trials)))
    med = {}
    for dblock in (50, 100, 200, 400):
        vals = [r["esd_w1"] for r in rows if r["d_block"] == dblock]
        med[str(dblock)] = float(np.median(vals))
    return ["d_block", "trial", "esd_w1"], rows, {"median_esd_w1": med}, "esdconv"


def _scenario_als_envelope(cfg: ExperimentConfig):
    rows = []
    for d in (10, 30):
        def task(i, d=d):
            t = sample_tensor(cfg.p, d, cfg.field, cfg.seed, index=i)
            est = estimate_injective_norm(t, restarts=cfg.restarts)
            return {"d": d, "trial": i, "value_over_sqrt_d": est.value / math.sqrt(d)}
        rows.extend(pmap(task, range(cfg.trials)))
    alpha = math.sqrt(cfg.p) * solve_e0(cfg.p)
    summary = {"alpha_p": alpha,
               "max_d10": max(r["value_over_sqrt_d"] for r in rows if r["d"] == 10),
               "max_d30": max(r["value_over_sqrt_d"] for r in rows if r["d"] == 30)}
    return ["d", "trial", "value_over_sqrt_d"], rows, summary, "envelope"


def _scenario_kr_laplace_trend(cfg: ExperimentConfig):
    e0 = solve_e0(cfg.p)
    dset = IntervalSet.of((e0 + 0.1, e0 + 0.2))
    rows = []
    for d in (20, 40, 80):
        est = kr_bound(cfg.p, d, cfg.field, dset, samples_per_point=cfg.samples, seed=cfg.seed)
        rows.append({
            "d": d,
            "log_bound": est.log_bound,
            "per_coordinate_rate": est.log_bound / (cfg.p * (d - 1)),
            "mc_stderr_log": est.mc_stderr_log,
            "laplace_prediction": est.laplace_prediction,
        })
    cols = ["d", "log_bound", "per_coordinate_rate", "mc_stderr_log", "laplace_prediction"]
    return cols, rows, {"sigma_ref": rows[0]["laplace_prediction"]}, "trend"


def _scenario_p2_coherence(cfg: ExperimentConfig):
    rows = []
    for d in (2, 3):
        dset = IntervalSet.of((-8.0, 8.0))
        est = kr_bound(2, d, Field.REAL, dset, samples_per_point=cfg.samples, seed=cfg.seed)
        rows.append({
            "d": d,
            "bound": math.exp(est.log_bound),
            "exact_count": 4 * d,
            "rel_err": math.exp(est.log_bound) / (4 * d) - 1.0,
        })
    return ["d", "bound", "exact_count", "rel_err"], rows, {}, "coherence"


SCENARIOS = {
    "constants-sweep": _scenario_constants_sweep,
    "esd-convergence": _scenario_esd_convergence,
    "als-envelope": _scenario_als_envelope,
    "kr-laplace-trend": _scenario_kr_laplace_trend,
    "p2-coherence": _scenario_p2_coherence,
}


def _run_experiment(cfg: ExperimentConfig):
    if cfg.name not in SCENARIOS:
        raise UsageError(f"unknown experiment {cfg.name!r}; choose from {sorted(SCENARIOS)}")
    return SCENARIOS[cfg.name](cfg)


SUBCOMMANDS = {
    "constants": _run_constants,
    "sample-tensor": _run_sample_tensor,
    "inj-norm": _run_inj_norm,
    "gme": _run_gme,
    "rmt": _run_rmt,
    "kac-rice": _run_kac_rice,
    "audit-covariance": _run_audit,
    "experiment": _run_experiment,
}


def run(cfg: ExperimentConfig) -> ResultManifest:
    """Dispatch a validated config, write data file + manifest, return the manifest."""
    cfg.validate()
    t0 = time.perf_counter()
    cols, rows, summary, fig_spec = SUBCOMMANDS[cfg.subcommand](cfg)

    ext = "json" if cfg.out_format == "json" else "csv"
    out_path = Path(cfg.out_path) if cfg.out_path else Path(f"{cfg.subcommand}.{ext}")
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if cfg.out_format == "csv":
        write_csv(out_path, cols, rows)
    else:
        write_json_data(out_path, cfg.subcommand, cols, rows)

    figure_paths: list[str] = []
    if cfg.figures:
        from . import figures
        figure_paths = figures.render(fig_spec, cfg, cols, rows, Path(cfg.figures))

    manifest = ResultManifest(
        tool_version=__version__,
        schema_version=SCHEMA_VERSION,
        config=cfg.to_dict(),
        wall_time_seconds=time.perf_counter() - t0,
        row_count=len(rows),
        columns=cols,
        summary=summary,
        data_path=str(out_path),
        figure_paths=figure_paths,
    )
    write_manifest(out_path.with_name(out_path.name + ".manifest.json"), manifest)
    return manifest
