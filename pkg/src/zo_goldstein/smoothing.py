"""Uniform randomized smoothing and the two-point gradient estimator.

f_rho(x) = E_{z ~ Unif(B(0,1))} f(x + rho z).  The estimator

    g = d / (2 rho) * (F(x + rho w; xi) - F(x - rho w; xi)) * w,   w ~ Unif(S^{d-1}),

is unbiased for grad f_rho(x).  The Monte-Carlo helpers return standard errors
so callers can set tolerances as multiples of them.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from zo_goldstein.errors import UsageError
from zo_goldstein.objective import StochasticObjective

log = logging.getLogger(__name__)

# floats per chunk in the Monte-Carlo loops
_CHUNK_FLOATS = 1 << 21


@dataclass(frozen=True)
class EstimatorSample:
    g: np.ndarray
    w: np.ndarray
    component: np.ndarray


@dataclass(frozen=True)
class MCEstimate:
    """Monte-Carlo mean with its standard error (same shape as ``mean``)."""

    mean: np.ndarray | float
    stderr: np.ndarray | float
    n: int


def _check_dim(d):
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise UsageError(f"dimension must be a positive integer, got {d!r}")


def sample_unit_sphere(d: int, rng: np.random.Generator, size=None) -> np.ndarray:
    """Uniform draws from S^{d-1} by normalizing standard Gaussians."""
    _check_dim(d)
    shape = (d,) if size is None else ((size,) if isinstance(size, int) else tuple(size)) + (d,)
    w = rng.standard_normal(shape)
    return w / np.linalg.norm(w, axis=-1, keepdims=True)


def sample_unit_ball(d: int, rng: np.random.Generator, size=None) -> np.ndarray:
    """Uniform draws from B(0,1): a sphere direction scaled by U^{1/d}."""
    w = sample_unit_sphere(d, rng, size=size)
    u = rng.random(w.shape[:-1])
    return w * (u ** (1.0 / d))[..., None]


def _check_rho(rho):
    if not (np.isfinite(rho) and rho > 0):
        raise UsageError(f"smoothing radius must be positive and finite, got {rho}")
    if rho < 1e-8:
        log.warning("smoothing radius %.3g is tiny; estimator variance grows like (d/rho)^2", rho)


def estimator_batch(obj: StochasticObjective, x: np.ndarray, rho: float, xi: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Two-point estimates for stacked points/payloads/directions.

    ``x`` broadcasts against ``w`` of shape ``(..., d)``; ``xi`` carries the
    matching leading axes.  No argument validation, for use in hot loops.
    """
    step = rho * w
    diff = obj.difference(x + step, x - step, xi)
    return (obj.dimension / (2.0 * rho)) * diff[..., None] * w


def grad_estimate(obj: StochasticObjective, x, rho: float, xi, w) -> EstimatorSample:
    """One two-point estimate at ``x`` with a shared payload ``xi`` and direction ``w``."""
    x = obj.check_point(x)
    _check_rho(rho)
    w = np.asarray(w, dtype=float)
    if w.shape != x.shape:
        raise UsageError(f"direction has shape {w.shape}, expected {x.shape}")
    if abs(np.linalg.norm(w) - 1.0) > 1e-12:
        raise UsageError("direction must be a unit vector")
    xi = np.asarray(xi, dtype=float)
    return EstimatorSample(g=estimator_batch(obj, x, rho, xi, w), w=w, component=xi)


def batched_grad_estimate(obj: StochasticObjective, x, rho: float, k: int, rng: np.random.Generator) -> np.ndarray:
    """Mean of ``k`` independent two-point estimates, 2k evaluations.

    The ``k`` payloads are drawn first, then the ``k`` directions, so ``k=1``
    matches ``grad_estimate`` fed with the same two draws.
    """
    x = obj.check_point(x)
    _check_rho(rho)
    if int(k) != k or k < 1:
        raise UsageError(f"batch size must be a positive integer, got {k!r}")
    xi = obj.noise.sample(rng, size=int(k))
    w = sample_unit_sphere(obj.dimension, rng, size=int(k))
    return estimator_batch(obj, x, rho, xi, w).mean(axis=0)


class _Moments:
    """Chunked mean and variance of samples shifted by the first one."""

    def __init__(self):
        self.n = 0
        self.shift = None
        self.s = 0.0
        self.ss = 0.0

    def add(self, samples: np.ndarray):
        if self.shift is None:
            self.shift = samples[0].copy()
        r = samples - self.shift
        self.n += samples.shape[0]
        self.s = self.s + r.sum(axis=0)
        self.ss = self.ss + (r * r).sum(axis=0)

    def result(self) -> MCEstimate:
        n = self.n
        mean = self.shift + self.s / n
        if n > 1:
            var = np.maximum(self.ss - self.s * self.s / n, 0.0) / (n - 1)
        else:
            var = np.zeros_like(np.asarray(self.s, dtype=float))
        return MCEstimate(mean=mean, stderr=np.sqrt(var / n), n=n)


def _chunks(n, d):
    size = max(1, _CHUNK_FLOATS // max(d, 1))
    done = 0
    while done < n:
        m = min(size, n - done)
        yield m
        done += m


def _check_n(n):
    if int(n) != n or n < 1:
        raise UsageError(f"sample count must be a positive integer, got {n!r}")


def smoothed_value_mc(obj: StochasticObjective, x, rho: float, n: int, rng: np.random.Generator) -> MCEstimate:
    """Monte-Carlo estimate of f_rho(x) with fresh payloads per sample."""
    x = obj.check_point(x)
    _check_rho(rho)
    _check_n(n)
    acc = _Moments()
    for m in _chunks(int(n), obj.dimension):
        z = sample_unit_ball(obj.dimension, rng, size=m)
        xi = obj.noise.sample(rng, size=m)
        acc.add(obj.values(x + rho * z, xi))
    est = acc.result()
    return MCEstimate(mean=float(est.mean), stderr=float(est.stderr), n=est.n)


def smoothed_grad_mc(obj: StochasticObjective, x, rho: float, n: int, rng: np.random.Generator) -> MCEstimate:
    """Monte-Carlo estimate of grad f_rho(x): the mean of ``n`` two-point estimates.

    Returns per-coordinate standard errors.
    """
    x = obj.check_point(x)
    _check_rho(rho)
    _check_n(n)
    acc = _Moments()
    for m in _chunks(int(n), obj.dimension):
        xi = obj.noise.sample(rng, size=m)
        w = sample_unit_sphere(obj.dimension, rng, size=m)
        acc.add(estimator_batch(obj, x, rho, xi, w))
    return acc.result()


def estimator_second_moment(obj: StochasticObjective, x, rho: float, n: int, rng: np.random.Generator, k: int = 1) -> MCEstimate:
    """Monte-Carlo estimate of E|g|^2 for the k-sample averaged estimator."""
    x = obj.check_point(x)
    _check_rho(rho)
    _check_n(n)
    acc = _Moments()
    per = max(1, _CHUNK_FLOATS // (obj.dimension * k))
    done = 0
    while done < n:
        m = min(per, n - done)
        xi = obj.noise.sample(rng, size=(m, k))
        w = sample_unit_sphere(obj.dimension, rng, size=(m, k))
        g = estimator_batch(obj, x, rho, xi, w).mean(axis=1)
        acc.add(np.einsum("ij,ij->i", g, g))
        done += m
    est = acc.result()
    return MCEstimate(mean=float(est.mean), stderr=float(est.stderr), n=est.n)
