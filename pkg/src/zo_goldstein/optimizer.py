"""Clipped two-point zero-order method with window averaging, and an SGD baseline.

Main loop, for t = 1..T with Delta_1 = 0:

    x_t     = x_{t-1} + Delta_t
    z_t     = x_{t-1} + s_t Delta_t,                s_t ~ Unif[0, 1]
    g_t     = two-point estimate of grad f_rho(z_t)  (mean of k samples)
    Delta_{t+1} = clip_D(Delta_t - eta g_t)

The z's are cut into K = floor(T/M) consecutive windows of M = floor(nu/D)
points; the output is the mean of a uniformly chosen window together with that
window's points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from zo_goldstein.errors import ConfigurationError, InvariantError, NumericalFault, UsageError
from zo_goldstein.objective import StochasticObjective
from zo_goldstein.smoothing import estimator_batch, sample_unit_sphere

# relative slack for ceil/floor of formula values that land on an integer up to rounding
_INT_SLACK = 1e-12


def ceil_int(value: float) -> int:
    return int(math.ceil(value * (1.0 - _INT_SLACK)))


def floor_int(value: float) -> int:
    return int(math.floor(value * (1.0 + _INT_SLACK)))


def _positive(name, value):
    if not (isinstance(value, (int, float, np.integer, np.floating)) and math.isfinite(value) and value > 0):
        raise ConfigurationError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class OptimizerConfig:
    """Hyper-parameters of the clipped method. ``M`` and ``K`` are derived."""

    rho: float
    nu: float
    D: float
    eta: float
    T: int
    k: int = 1

    def __post_init__(self):
        for name in ("rho", "nu", "D", "eta"):
            _positive(name, getattr(self, name))
        for name in ("T", "k"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")
        if self.M < 1:
            raise ConfigurationError(f"window size M = floor(nu/D) = 0: clip D={self.D:.4g} exceeds nu={self.nu:.4g}")
        if self.K < 1:
            raise ConfigurationError(f"window count K = floor(T/M) = 0: budget T={self.T} is below M={self.M}")

    @property
    def M(self) -> int:
        return floor_int(self.nu / self.D)

    @property
    def K(self) -> int:
        return self.T // self.M

    def as_dict(self) -> dict:
        return {"rho": self.rho, "nu": self.nu, "D": self.D, "eta": self.eta, "T": self.T, "k": self.k, "M": self.M, "K": self.K}


def split_radius(Delta: float, L0: float, delta: float) -> tuple[float, float]:
    """rho = min(delta/2, Delta/L0) and nu = delta - rho, with rho + nu == delta in floats."""
    rho = min(delta / 2.0, Delta / L0)
    # some (rho, delta) pairs admit no exact nu; then nudge rho down an ulp and retry
    for _ in range(64):
        nu = delta - rho
        for cand in (nu, np.nextafter(nu, 0.0), np.nextafter(nu, np.inf)):
            if rho + cand == delta:
                return float(rho), float(cand)
        rho = np.nextafter(rho, 0.0)
    raise ConfigurationError(f"cannot split delta={delta!r} into rho + nu exactly")


def theory_budget(Delta: float, L0: float, delta: float, eps: float, d: int) -> float:
    """d L0^2 (Delta + rho L0) / (nu eps^3), the budget before the constant c_T."""
    rho, nu = split_radius(Delta, L0, delta)
    return d * L0**2 * (Delta + rho * L0) / (nu * eps**3)


def derive_hyperparams(
    Delta: float,
    L0: float,
    delta: float,
    eps: float,
    d: int,
    c_T: float = 1.0,
    *,
    T: int | None = None,
    k: int = 1,
) -> OptimizerConfig:
    """Hyper-parameters for a (delta, eps)-stationary target.

    ``T`` defaults to ``ceil(c_T * theory_budget(...))``; passing ``T``
    directly fixes the budget instead.  Clip radius and step size follow

        D   = ((Delta + rho L0) sqrt(nu) / (sqrt(d) L0 T))^(2/3)
        eta = (Delta + rho L0) / (d L0^2 T)
    """
    for name, v in (("Delta", Delta), ("L0", L0), ("delta", delta), ("eps", eps), ("c_T", c_T)):
        _positive(name, v)
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise ConfigurationError(f"d must be a positive integer, got {d!r}")
    rho, nu = split_radius(Delta, L0, delta)
    if T is None:
        T = ceil_int(c_T * theory_budget(Delta, L0, delta, eps, d))
    T = max(int(T), 1)
    shifted_gap = Delta + rho * L0
    D = (shifted_gap * math.sqrt(nu) / (math.sqrt(d) * L0 * T)) ** (2.0 / 3.0)
    eta = shifted_gap / (d * L0**2 * T)
    return OptimizerConfig(rho=rho, nu=nu, D=D, eta=eta, T=T, k=k)


def clip_to_ball(v: np.ndarray, D: float) -> np.ndarray:
    """Radial projection onto the closed ball of radius D; the output norm never exceeds D."""
    v = np.asarray(v, dtype=float)
    n = math.sqrt(float(v @ v))
    if n <= D:
        return v
    out = v * (D / n)
    # rounding can leave the norm one ulp above D
    while math.sqrt(float(out @ out)) > D:
        out = out * (1.0 - 2.0**-52)
    return out


@dataclass
class RunResult:
    x_out: np.ndarray
    window_points: np.ndarray
    chosen_window: int
    window_means: np.ndarray
    norm_delta: np.ndarray
    norm_g: np.ndarray
    evaluations_used: int
    max_window_radius: float
    config: OptimizerConfig
    # (t, x_t, z_t) every z_log_stride iterations
    z_log: list[tuple[int, np.ndarray, np.ndarray]] = field(default_factory=list)

    def trace_records(self, stride: int = 1):
        """JSONL-ready per-iteration records, 1-based ``t``; iterates are included where logged."""
        points = {t: (x, z) for t, x, z in self.z_log}
        for t in range(0, len(self.norm_delta), max(1, stride)):
            rec = {"t": t + 1, "norm_delta": float(self.norm_delta[t]), "norm_g": float(self.norm_g[t])}
            if t + 1 in points:
                x, z = points[t + 1]
                rec["x"] = x.tolist()
                rec["z"] = z.tolist()
            yield rec


def run(
    obj: StochasticObjective,
    x0,
    config: OptimizerConfig,
    rng: np.random.Generator,
    *,
    z_log_stride: int | None = None,
    block: int = 4096,
) -> RunResult:
    """Run the clipped method from ``x0``.

    Randomness: ``rng`` spawns a loop stream (drawn in blocks of ``s``,
    payloads, directions) and a selection stream from which the window index
    is drawn.  Only the chosen window's points are retained in full.
    """
    x0 = obj.check_point(x0)
    d = obj.dimension
    rho, eta, D, T, k = config.rho, config.eta, config.D, config.T, config.k
    M, K = config.M, config.K
    loop_rng, select_rng = rng.spawn(2)
    k_out = int(select_rng.integers(1, K + 1))

    scale = d / (2.0 * rho)
    inv_k = 1.0 / k
    bound = (M - 1) * D
    if bound > config.nu:
        raise InvariantError(f"(M-1)D = {bound} exceeds nu = {config.nu}")

    norm_delta = np.empty(T)
    norm_g = np.empty(T)
    window_means = np.empty((K, d))
    window_buf = np.empty((M, d))
    chosen = None
    max_radius = 0.0
    z_log = []
    windowed = M * K

    x_prev = x0.copy()
    delta = np.zeros(d)
    for start in range(0, T, block):
        B = min(block, T - start)
        s = loop_rng.random(B)
        xi = obj.noise.sample(loop_rng, size=(B, k))
        W = sample_unit_sphere(d, loop_rng, size=(B, k))
        steps = rho * W
        for j in range(B):
            t = start + j
            z = x_prev + s[j] * delta
            diff = obj.difference(z + steps[j], z - steps[j], xi[j])
            g = (scale * inv_k) * (diff @ W[j])
            v = delta - eta * g
            nv = math.sqrt(float(v @ v))
            if not math.isfinite(nv):
                raise NumericalFault("non-finite update", t + 1)
            if nv > D:
                v = clip_to_ball(v, D)
                if math.sqrt(float(v @ v)) > D:
                    raise InvariantError(f"clipped step exceeds D at iteration {t + 1}")
            norm_delta[t] = math.sqrt(float(delta @ delta))
            norm_g[t] = math.sqrt(float(g @ g))
            x_prev = x_prev + delta
            delta = v

            if z_log_stride and t % z_log_stride == 0:
                z_log.append((t + 1, x_prev.copy(), z.copy()))
            if t < windowed:
                m = t % M
                window_buf[m] = z
                if m == M - 1:
                    kk = t // M
                    mean = window_buf.mean(axis=0)
                    radius = float(np.linalg.norm(window_buf - mean, axis=1).max())
                    if radius > bound:
                        raise InvariantError(f"window {kk + 1}: point at distance {radius} > (M-1)D = {bound}")
                    max_radius = max(max_radius, radius)
                    window_means[kk] = mean
                    if kk + 1 == k_out:
                        chosen = window_buf.copy()

    return RunResult(
        x_out=window_means[k_out - 1].copy(),
        window_points=chosen,
        chosen_window=k_out,
        window_means=window_means,
        norm_delta=norm_delta,
        norm_g=norm_g,
        evaluations_used=2 * k * T,
        max_window_radius=max_radius,
        config=config,
        z_log=z_log,
    )


def baseline_step_size(Delta: float, L0: float, delta: float, d: int, T: int) -> float:
    """Constant SGD step for a smooth nonconvex problem, applied to f_delta.

    Uses smoothness L1 = sqrt(d) L0 / delta and second moment sigma^2 = d L0^2:
    eta = min(1/L1, sqrt(Delta_h / (L1 sigma^2 T))) with Delta_h = Delta + delta L0.
    """
    L1 = math.sqrt(d) * L0 / delta
    sigma2 = d * L0**2
    return min(1.0 / L1, math.sqrt((Delta + delta * L0) / (L1 * sigma2 * T)))


def baseline_sgd_smoothed(
    obj: StochasticObjective,
    x0,
    delta: float,
    eta_b: float,
    T_b: int,
    k: int,
    rng: np.random.Generator,
    *,
    block: int = 4096,
) -> np.ndarray:
    """Plain SGD on f_delta with the two-point estimator; returns a uniformly random iterate.

    The returned iterate is one of x_0..x_{T_b-1}, the points where estimates were taken.
    """
    x0 = obj.check_point(x0)
    for name, v in (("delta", delta), ("eta_b", eta_b)):
        _positive(name, v)
    if int(T_b) != T_b or T_b < 1 or int(k) != k or k < 1:
        raise UsageError("T_b and k must be positive integers")
    d = obj.dimension
    loop_rng, select_rng = rng.spawn(2)
    tau = int(select_rng.integers(0, T_b))
    x = x0.copy()
    for start in range(0, tau, block):
        B = min(block, tau - start)
        xi = obj.noise.sample(loop_rng, size=(B, k))
        W = sample_unit_sphere(d, loop_rng, size=(B, k))
        for j in range(B):
            g = estimator_batch(obj, x, delta, xi[j], W[j]).mean(axis=0)
            x = x - eta_b * g
            if not np.all(np.isfinite(x)):
                raise NumericalFault("non-finite iterate", start + j + 1)
    return x
