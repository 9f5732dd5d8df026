"""Experiment orchestration and CSV/JSONL reporting.

Every random quantity in a report is drawn from a substream of
``SeedSequence(seed)`` keyed by the cell it belongs to, so rows are
reproducible individually and independent of execution order.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from zo_goldstein.config import ExperimentConfig
from zo_goldstein.errors import ConfigurationError
from zo_goldstein.highprob import derive_validation_params, run_validated
from zo_goldstein.objective import StochasticObjective, make_builtin
from zo_goldstein.optimizer import (
    baseline_sgd_smoothed,
    baseline_step_size,
    derive_hyperparams,
    run,
    theory_budget,
)
from zo_goldstein.stationarity import goldstein_upper_certificate, window_certificate

log = logging.getLogger(__name__)


@dataclass
class Report:
    rows: list[dict] = field(default_factory=list)
    tables: dict[str, list[dict]] = field(default_factory=dict)
    config_echo: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    trace: list[dict] | None = None

    def write(self, out_dir: str | Path) -> list[Path]:
        """summary.csv, one CSV per table, config_echo.json, timings.json and (optionally) trace.jsonl."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = [write_csv(out / "summary.csv", self.rows)]
        for name, rows in self.tables.items():
            written.append(write_csv(out / f"{name}.csv", rows))
        p = out / "config_echo.json"
        p.write_text(json.dumps(self.config_echo, indent=2, sort_keys=True, default=_jsonable) + "\n")
        written.append(p)
        p = out / "timings.json"
        p.write_text(json.dumps(self.timings, indent=2, sort_keys=True) + "\n")
        written.append(p)
        if self.trace is not None:
            p = out / "trace.jsonl"
            with open(p, "w") as fh:
                for rec in self.trace:
                    fh.write(json.dumps(rec) + "\n")
            written.append(p)
        return written


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    raise TypeError(type(v))


def write_csv(path: Path, rows: list[dict]) -> Path:
    keys: list[str] = []
    for row in rows:
        keys += [k for k in row if k not in keys]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(row.get(k)) for k in keys})
    return path


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for cell ``key`` under master ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key)))


# --- setup helpers -------------------------------------------------------


def build_objective(cfg: ExperimentConfig, d: int | None = None) -> StochasticObjective:
    return make_builtin(cfg.objective, cfg.d if d is None else d, cfg.params)


def starting_point(cfg: ExperimentConfig, d: int) -> np.ndarray:
    if cfg.x0 is not None:
        x0 = np.asarray(cfg.x0, dtype=float)
        if x0.shape != (d,):
            raise ConfigurationError(f"start.x0 has length {x0.size}, objective dimension is {d}")
        return x0
    x0 = np.zeros(d)
    if cfg.start_radius is not None:
        x0[0] = float(cfg.start_radius)
    return x0


def theory_inputs(cfg: ExperimentConfig, obj: StochasticObjective, x0: np.ndarray) -> tuple[float, float]:
    """(Delta, L0): config overrides, else f(x0) - inf f and the declared Lipschitz bound."""
    L0 = float(cfg.L0) if cfg.L0 is not None else obj.lipschitz_bound
    if cfg.Delta is not None:
        return float(cfg.Delta), L0
    if obj.known_infimum is None:
        raise ConfigurationError(f"{obj.name}: infimum unknown, set theory.Delta")
    gap = obj.mean_value(x0) - obj.known_infimum
    if gap <= 0:
        # x0 is a global minimizer; every positive number bounds the gap
        gap = L0 * cfg.delta
        log.info("f(x0) equals the infimum; using Delta = L0 * delta = %g", gap)
    return float(gap), L0


def optimizer_config(cfg: ExperimentConfig, obj, x0, d=None, T=None):
    Delta, L0 = theory_inputs(cfg, obj, x0)
    d = obj.dimension if d is None else d
    return derive_hyperparams(Delta, L0, cfg.delta, cfg.eps, d, cfg.c_T, T=T if T is not None else cfg.T, k=cfg.k), Delta, L0


def window_samples(cfg: ExperimentConfig, M: int) -> int:
    if cfg.n_window is not None:
        return int(cfg.n_window)
    return max(1, math.ceil(cfg.window_budget / M))


def certify(cfg, obj, x_out, window_points, rho, nu, rng_window, rng_hull) -> dict:
    wc = window_certificate(obj, window_points, rho, window_samples(cfg, len(window_points)), rng_window, nu=nu)
    row = {"window_cert": wc.value, "window_se": wc.standard_error, "window_delta": wc.delta}
    if obj.gradient is not None:
        hc = goldstein_upper_certificate(obj, x_out, cfg.delta, cfg.n_hull, rng_hull)
        row["hull_cert"] = hc.value
    else:
        row["hull_cert"] = None
    return row


# --- modes ---------------------------------------------------------------


def run_experiment(cfg: ExperimentConfig) -> Report:
    """Execute ``cfg.mode`` and return the report (not written to disk)."""
    if cfg.mode == "sweep":
        return sweep_dimension(cfg, cfg.dims, cfg.trials)
    if cfg.mode == "concentration":
        return concentration_check(cfg.N, cfg.conc_d, cfg.lambdas, cfg.conc_trials, substream(cfg.seed, 0), echo=cfg.echo())

    obj = build_objective(cfg)
    x0 = starting_point(cfg, obj.dimension)
    config, Delta, L0 = optimizer_config(cfg, obj, x0)
    echo = cfg.echo()
    echo["resolved"] = {**config.as_dict(), "Delta": Delta, "L0": L0, "c_T_effective": config.T / theory_budget(Delta, L0, cfg.delta, cfg.eps, obj.dimension)}
    report = Report(config_echo=echo)
    t0 = time.perf_counter()

    if cfg.mode == "run":
        result = run(obj, x0, config, substream(cfg.seed, 0), z_log_stride=_trace_stride(cfg))
        row = {
            "seed": cfg.seed,
            "mode": "run",
            "objective": obj.name,
            "d": obj.dimension,
            "T": config.T,
            "M": config.M,
            "K": config.K,
            "chosen_window": result.chosen_window,
            "evaluations": result.evaluations_used,
            "max_window_radius": result.max_window_radius,
            "nu": config.nu,
        }
        row.update(certify(cfg, obj, result.x_out, result.window_points, config.rho, config.nu, substream(cfg.seed, 1), substream(cfg.seed, 2)))
        row["x_out"] = json.dumps(result.x_out.tolist())
        report.rows.append(row)
        report.trace = _trace(cfg, result)
    else:
        gamma = cfg.gamma if cfg.gamma is not None else 0.25
        vp = derive_validation_params(gamma, obj.dimension, L0, config.M, cfg.eps, cfg.c_S)
        echo["resolved"].update({"gamma": gamma, "R": vp.R, "S": vp.S, "lambda": vp.lam, "c_S": vp.c_S})
        vr = run_validated(obj, x0, config, vp, substream(cfg.seed, 0), M=config.M)
        report.tables["rounds"] = [
            {"round": r + 1, "norm_ghat": float(vr.norms[r]), "chosen": int(r + 1 == vr.r_star)} for r in range(vp.R)
        ]
        chosen = vr.runs[vr.r_star - 1]
        row = {
            "seed": cfg.seed,
            "mode": "validated",
            "objective": obj.name,
            "d": obj.dimension,
            "T": config.T,
            "M": config.M,
            "R": vp.R,
            "S": vp.S,
            "r_star": vr.r_star,
            "evaluations": vr.total_evaluations,
            "norm_ghat": float(vr.norms[vr.r_star - 1]),
        }
        row.update(certify(cfg, obj, vr.x_out, chosen.window_points, config.rho, config.nu, substream(cfg.seed, 1), substream(cfg.seed, 2)))
        row["x_out"] = json.dumps(vr.x_out.tolist())
        report.rows.append(row)
        report.trace = _trace(cfg, chosen)
    report.timings["wall_seconds"] = time.perf_counter() - t0
    return report


def _trace_stride(cfg):
    return None if cfg.trace == "none" else 1 if cfg.trace == "full" else cfg.trace_stride


def _trace(cfg, result):
    if cfg.trace == "none":
        return None
    return list(result.trace_records(_trace_stride(cfg)))


def _doubling(T_start, T_cap):
    T = T_start
    while T <= T_cap:
        yield T
        T *= 2


def sweep_dimension(cfg: ExperimentConfig, dims, trials: int) -> Report:
    """Smallest doubling budget reaching a window certificate <= eps, per dimension and trial.

    Both the clipped method and SGD on f_delta are searched.  The SGD
    certificate is the Monte-Carlo norm of grad f_delta at its output.  Rows
    that reach ``T_cap`` without success are flagged, with ``T_star`` empty.
    """
    dims = [int(d) for d in dims]
    if dims != sorted(dims) or trials < 1:
        raise ConfigurationError("dims must be sorted ascending and trials >= 1")
    report = Report(config_echo={**cfg.echo(), "dims": dims, "trials": trials})
    t0 = time.perf_counter()
    methods = ("clipped", "baseline")
    for di, d in enumerate(dims):
        obj = build_objective(cfg, d)
        x0 = starting_point(cfg, d)
        Delta, L0 = theory_inputs(cfg, obj, x0)
        for trial in range(trials):
            for mi, method in enumerate(methods):
                row = {"d": d, "trial": trial, "method": method, "T_star": None, "certificate": None, "flagged": 1}
                for ti, T in enumerate(_doubling(cfg.T_start, cfg.T_cap)):
                    key = (di, trial, mi, ti)
                    value = _sweep_cell(cfg, obj, x0, Delta, L0, T, method, key)
                    if value is None:
                        continue
                    if value <= cfg.eps:
                        row.update(T_star=T, certificate=value, flagged=0)
                        break
                    row["certificate"] = value
                report.rows.append(row)
                log.info("sweep d=%d trial=%d %s: T*=%s", d, trial, method, row["T_star"])
    report.tables["scaling"] = scaling_table(report.rows, dims, methods)
    report.timings["wall_seconds"] = time.perf_counter() - t0
    return report


def _sweep_cell(cfg, obj, x0, Delta, L0, T, method, key):
    d = obj.dimension
    if method == "clipped":
        try:
            config = derive_hyperparams(Delta, L0, cfg.delta, cfg.eps, d, T=T, k=cfg.k)
        except ConfigurationError:
            return None
        result = run(obj, x0, config, substream(cfg.seed, *key, 0))
        cert = window_certificate(obj, result.window_points, config.rho, window_samples(cfg, config.M), substream(cfg.seed, *key, 1), nu=config.nu)
        return cert.value
    eta_b = baseline_step_size(Delta, L0, cfg.delta, d, T)
    x = baseline_sgd_smoothed(obj, x0, cfg.delta, eta_b, T, cfg.k, substream(cfg.seed, *key, 0))
    cert = window_certificate(obj, x[None, :], cfg.delta, cfg.window_budget, substream(cfg.seed, *key, 1), nu=0.0)
    return cert.value


def scaling_table(rows, dims, methods) -> list[dict]:
    """Median T* per (method, d) and the least-squares log-log slope across d."""
    table = []
    for method in methods:
        medians = []
        for d in dims:
            ts = [r["T_star"] for r in rows if r["method"] == method and r["d"] == d]
            ok = [t for t in ts if t is not None]
            # failed trials count as exceeding every tested budget
            med = float(np.median([t if t is not None else np.inf for t in ts])) if ts else float("nan")
            medians.append(med)
            table.append({"method": method, "d": d, "median_T_star": med, "successes": len(ok), "trials": len(ts)})
        slope = loglog_slope(dims, medians)
        table.append({"method": method, "d": "slope", "median_T_star": slope, "successes": None, "trials": None})
    return table


def loglog_slope(xs, ys) -> float:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 2 or not np.all(np.isfinite(ys)) or np.any(ys <= 0):
        return float("nan")
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def concentration_check(N: int, d: int, lambda_values, trials: int, rng: np.random.Generator, sigmas=None, echo=None) -> Report:
    """Exceedance frequency of |sum X_i|^2 >= lam * sum sigma_i^2 against the 1/lam bound.

    X_i = sigma_i * r_i / sqrt(d) with r_i a Rademacher vector, so X_i has
    mean zero and norm exactly sigma_i.
    """
    if min(N, d, trials) < 1 or any(lam <= 0 for lam in lambda_values):
        raise ConfigurationError("N, d, trials must be >= 1 and lambdas > 0")
    sig = np.ones(N) if sigmas is None else np.asarray(sigmas, dtype=float)
    if sig.shape != (N,):
        raise ConfigurationError("sigmas must have length N")
    total_var = float(np.sum(sig**2))
    per = max(1, (1 << 22) // (N * d))
    sq = np.empty(trials)
    done = 0
    while done < trials:
        c = min(per, trials - done)
        r = rng.integers(0, 2, size=(c, N, d), dtype=np.int8) * 2 - 1
        sums = np.einsum("cnd,n->cd", r, sig) / math.sqrt(d)
        sq[done : done + c] = np.einsum("cd,cd->c", sums, sums)
        done += c
    report = Report(config_echo=echo or {"N": N, "d": d, "lambdas": list(lambda_values), "trials": trials})
    report.rows.append(
        {
            "statistic": "mean_ratio",
            "lambda": None,
            "value": float(sq.mean() / total_var),
            "stderr": float(sq.std(ddof=1) / math.sqrt(trials) / total_var) if trials > 1 else None,
            "bound": 1.0,
        }
    )
    for lam in lambda_values:
        p = float(np.mean(sq >= lam * total_var))
        report.rows.append(
            {
                "statistic": "exceedance",
                "lambda": float(lam),
                "value": p,
                "stderr": math.sqrt(p * (1 - p) / trials),
                "bound": min(1.0, 1.0 / lam),
            }
        )
    return report
