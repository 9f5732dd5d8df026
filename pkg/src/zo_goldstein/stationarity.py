"""Certificates for Goldstein stationarity.

The min-norm element of conv(S) for a finite S inside the Goldstein set
upper-bounds the min-norm element of the whole set, so sampling gradients in
B(x, delta) and solving a min-norm-point problem certifies (delta, eps)
stationarity from above.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from zo_goldstein.errors import ConvergenceError, UnsupportedOperationError, UsageError
from zo_goldstein.objective import StochasticObjective
from zo_goldstein.smoothing import estimator_batch, sample_unit_ball, sample_unit_sphere


@dataclass(frozen=True)
class StationarityCertificate:
    delta: float
    value: float
    standard_error: float
    method: str
    n_gradients: int

    def as_row(self) -> dict:
        return {
            "method": self.method,
            "delta": self.delta,
            "value": self.value,
            "stderr": self.standard_error,
            "n": self.n_gradients,
        }


def _affine_min_norm(P: np.ndarray) -> np.ndarray:
    """Coefficients mu (sum 1, any sign) minimizing |mu @ P|."""
    n = P.shape[0]
    A = np.empty((n + 1, n + 1))
    A[:n, :n] = P @ P.T
    A[:n, n] = 1.0
    A[n, :n] = 1.0
    A[n, n] = 0.0
    rhs = np.zeros(n + 1)
    rhs[n] = 1.0
    sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
    mu = sol[:n]
    return mu / mu.sum()


def min_norm_in_hull(gs, tol: float = 1e-9, max_iter: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Wolfe's min-norm-point algorithm over conv(gs).

    Returns ``(g, lam)`` with ``g = lam @ gs``, ``lam`` on the simplex, and
    ``min_i <g, g_i - g> >= -tol * (1 + |g|^2)``.  ``max_iter`` defaults to
    ``10 * len(gs) * d`` major iterations.
    """
    P = np.asarray(gs, dtype=float)
    if P.size == 0:
        raise UsageError("need a nonempty list of vectors with a common dimension")
    if P.ndim == 1:
        P = P[None, :]
    if P.ndim != 2 or P.shape[0] == 0:
        raise UsageError("need a nonempty list of vectors with a common dimension")
    if not np.all(np.isfinite(P)):
        raise UsageError("vectors must be finite")
    n, d = P.shape
    if max_iter is None:
        max_iter = 10 * n * d
    sq = np.einsum("ij,ij->i", P, P)

    active = [int(np.argmin(sq))]
    weights = np.array([1.0])
    x = P[active[0]].copy()

    def residual(x):
        xx = float(x @ x)
        return xx - float(np.min(P @ x)), xx

    for _ in range(max_iter):
        res, xx = residual(x)
        if res <= tol * (1.0 + xx):
            break
        j = int(np.argmin(P @ x))
        if j in active:
            # stalled in floating point; accept if the residual is negligible
            if res <= np.sqrt(tol) * (1.0 + xx):
                break
            raise ConvergenceError("min-norm point stalled", res)
        active.append(j)
        weights = np.append(weights, 0.0)
        # minor cycle: move toward the affine minimizer, dropping points whose weight reaches zero
        while True:
            mu = _affine_min_norm(P[active])
            if np.all(mu > 1e-14):
                weights = mu
                break
            neg = mu <= 1e-14
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(neg, weights / (weights - mu), np.inf)
            theta = float(np.clip(np.min(ratios), 0.0, 1.0))
            weights = weights + theta * (mu - weights)
            keep = weights > 1e-14
            keep[np.argmin(np.where(neg, ratios, np.inf))] = False
            if not keep.any():
                keep[np.argmax(weights)] = True
            active = [a for a, kflag in zip(active, keep) if kflag]
            weights = weights[keep]
            weights = weights / weights.sum()
        x = weights @ P[active]
    else:
        res, xx = residual(x)
        if res > tol * (1.0 + xx):
            raise ConvergenceError(f"no convergence within {max_iter} iterations", res)

    lam = np.zeros(n)
    lam[active] = weights
    return lam @ P, lam


def goldstein_upper_certificate(
    obj: StochasticObjective, x, delta: float, n: int, rng: np.random.Generator, tol: float = 1e-9
) -> StationarityCertificate:
    """Min-norm point of ``n`` exact gradients sampled uniformly in B(x, delta).

    The sampled hull sits inside the Goldstein delta-subdifferential, so the
    value is an upper bound on the true min-norm element.
    """
    if obj.gradient is None:
        raise UnsupportedOperationError(f"{obj.name} has no exact-gradient oracle")
    x = obj.check_point(x)
    if not (np.isfinite(delta) and delta > 0) or int(n) != n or n < 1:
        raise UsageError("delta must be positive and n a positive integer")
    y = x + delta * sample_unit_ball(obj.dimension, rng, size=int(n))
    grads = obj.gradient(y)
    g, _ = min_norm_in_hull(grads, tol=tol)
    return StationarityCertificate(
        delta=float(delta), value=float(np.linalg.norm(g)), standard_error=0.0, method="sampled_hull", n_gradients=int(n)
    )


def window_gradient_mc(obj: StochasticObjective, window_points, rho: float, n_per_point: int, rng: np.random.Generator):
    """Mean over the window of Monte-Carlo estimates of grad f_rho, with per-coordinate standard errors.

    Each point gets ``n_per_point`` fresh two-point estimates.
    """
    Z = np.atleast_2d(np.asarray(window_points, dtype=float))
    M, d = Z.shape
    if M < 1 or d != obj.dimension:
        raise UsageError(f"window must be a nonempty (M, {obj.dimension}) array")
    if int(n_per_point) != n_per_point or n_per_point < 1:
        raise UsageError("n_per_point must be a positive integer")
    n = int(n_per_point)
    per = max(1, (1 << 21) // (M * d))
    s = np.zeros((M, d))
    ss = np.zeros((M, d))
    shift = None
    done = 0
    while done < n:
        c = min(per, n - done)
        xi = obj.noise.sample(rng, size=(M, c))
        w = sample_unit_sphere(d, rng, size=(M, c))
        g = estimator_batch(obj, Z[:, None, :], rho, xi, w)
        if shift is None:
            shift = g[:, 0, :].copy()
        r = g - shift[:, None, :]
        s += r.sum(axis=1)
        ss += (r * r).sum(axis=1)
        done += c
    means = shift + s / n
    var = np.maximum(ss - s * s / n, 0.0) / max(n - 1, 1)
    return means.mean(axis=0), np.sqrt((var / n).sum(axis=0)) / M


def window_certificate(
    obj: StochasticObjective, window_points, rho: float, n_per_point: int, rng: np.random.Generator, nu: float | None = None
) -> StationarityCertificate:
    """Norm of the window average of grad f_rho, estimated by Monte Carlo.

    When every window point lies within ``nu`` of the window mean, this bounds
    the min-norm element of the Goldstein (rho + nu)-subdifferential at the
    mean, up to Monte-Carlo error.  The standard error is propagated to the
    norm by the delta method.
    """
    Z = np.atleast_2d(np.asarray(window_points, dtype=float))
    if nu is None:
        nu = float(np.linalg.norm(Z - Z.mean(axis=0), axis=1).max())
    g, se = window_gradient_mc(obj, Z, rho, n_per_point, rng)
    value = float(np.linalg.norm(g))
    if value > 0:
        se_norm = float(np.sqrt(np.sum((g / value) ** 2 * se**2)))
    else:
        se_norm = float(np.sqrt(np.sum(se**2)))
    return StationarityCertificate(
        delta=float(rho + nu), value=value, standard_error=se_norm, method="window_average", n_gradients=int(Z.shape[0] * n_per_point)
    )
