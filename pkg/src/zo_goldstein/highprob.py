"""Restarts plus post-optimization validation for a high-probability guarantee.

R independent runs start from the same x0.  For each run the window-average
smoothed gradient is re-estimated from S x M fresh two-point estimates, and the
run with the smallest estimated norm is returned.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from zo_goldstein.errors import ConfigurationError, UsageError
from zo_goldstein.objective import StochasticObjective
from zo_goldstein.optimizer import OptimizerConfig, RunResult, ceil_int, run
from zo_goldstein.smoothing import estimator_batch, sample_unit_sphere

log = logging.getLogger(__name__)

# second-moment constant of the two-point estimator
MOMENT_CONSTANT = 16.0 * math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class ValidationParams:
    gamma: float
    R: int
    S: int
    lam: int
    c_S: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.gamma < 1.0):
            raise UsageError(f"gamma must lie in (0, 1), got {self.gamma}")
        for name in ("R", "S", "lam"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")


def derive_validation_params(gamma: float, d: int, L0: float, M: int, eps: float, c_S: float = 1.0) -> ValidationParams:
    """R = ceil(log2(2/gamma)), lam = ceil(2R/gamma), S = ceil(c_S * 64 sqrt(2 pi) lam d L0^2 / (M eps^2)).

    With ``c_S = 1``, S is the smallest integer with
    lam * 16 sqrt(2 pi) d L0^2 / (M S) <= eps^2 / 4.
    """
    if not (0.0 < gamma < 1.0):
        raise UsageError(f"gamma must lie in (0, 1), got {gamma}")
    if not (L0 > 0 and eps > 0 and c_S > 0) or int(d) != d or d < 1 or int(M) != M or M < 1:
        raise UsageError("d and M must be positive integers; L0, eps, c_S positive")
    if c_S != 1.0:
        log.warning("validation sample count scaled by c_S = %g relative to the derived constant", c_S)
    R = max(1, ceil_int(math.log2(2.0 / gamma)))
    lam = ceil_int(2.0 * R / gamma)
    S = max(1, ceil_int(c_S * 4.0 * MOMENT_CONSTANT * lam * d * L0**2 / (M * eps**2)))
    return ValidationParams(gamma=float(gamma), R=R, S=S, lam=lam, c_S=float(c_S))


@dataclass
class ValidatedResult:
    x_out: np.ndarray
    r_star: int
    estimates: np.ndarray
    norms: np.ndarray
    stderrs: np.ndarray
    total_evaluations: int
    runs: list[RunResult] = field(default_factory=list)


def validate_window(
    obj: StochasticObjective, window_points: np.ndarray, rho: float, S: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Double average (1/S) sum_s (1/M) sum_m g_{m,s} over fresh payloads and directions.

    Returns the estimate and its per-coordinate standard error across the S outer samples.
    """
    Z = np.asarray(window_points, dtype=float)
    M, d = Z.shape
    per = max(1, (1 << 21) // (M * d))
    total = np.zeros(d)
    total_sq = np.zeros(d)
    done = 0
    while done < S:
        c = min(per, S - done)
        xi = obj.noise.sample(rng, size=(c, M))
        w = sample_unit_sphere(d, rng, size=(c, M))
        g_s = estimator_batch(obj, Z[None, :, :], rho, xi, w).mean(axis=1)
        total += g_s.sum(axis=0)
        total_sq += (g_s * g_s).sum(axis=0)
        done += c
    mean = total / S
    if S > 1:
        var = np.maximum(total_sq - S * mean * mean, 0.0) / (S - 1)
        se = np.sqrt(var / S)
    else:
        se = np.full(d, np.nan)
    return mean, se


def run_validated(
    obj: StochasticObjective, x0, config: OptimizerConfig, vp: ValidationParams, rng: np.random.Generator, *, M: int | None = None
) -> ValidatedResult:
    """Run R rounds of the clipped method and keep the round with the smallest validated norm.

    Round ``r`` uses the ``r``-th child of ``rng``, split again into an
    optimization stream and a validation stream.  Ties in the argmin go to
    the lowest round index.
    """
    if M is not None and M != config.M:
        raise ConfigurationError(f"validation was derived for M={M} but the optimizer has M={config.M}")
    rounds = rng.spawn(vp.R)
    d = obj.dimension
    estimates = np.empty((vp.R, d))
    stderrs = np.empty((vp.R, d))
    runs = []
    for r, round_rng in enumerate(rounds):
        opt_rng, val_rng = round_rng.spawn(2)
        result = run(obj, x0, config, opt_rng)
        estimates[r], stderrs[r] = validate_window(obj, result.window_points, config.rho, vp.S, val_rng)
        runs.append(result)
    norms = np.linalg.norm(estimates, axis=1)
    r_star = int(np.argmin(norms))
    return ValidatedResult(
        x_out=runs[r_star].x_out.copy(),
        r_star=r_star + 1,
        estimates=estimates,
        norms=norms,
        stderrs=stderrs,
        total_evaluations=vp.R * (2 * config.k * config.T + 2 * config.M * vp.S),
        runs=runs,
    )
