"""Stochastic objectives f(x) = E_xi[F(x; xi)] and a catalog of nonsmooth test problems.

Every catalog objective is built from a deterministic base function ``f0`` and a
noise family.  A realized noise component ``xi`` is a float array (possibly of
length zero for the noiseless family), so ``F(x; xi)`` is a pure function of
``(x, xi)`` and the per-component Lipschitz constant ``L(xi)`` is known in
closed form.

Functions here are vectorized over leading axes: ``x`` has shape ``(..., d)``
and ``xi`` has shape ``(..., *payload_shape)`` with matching leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from zo_goldstein.errors import UnsupportedOperationError, UsageError

ArrayFn = Callable[[np.ndarray], np.ndarray]

BUILTIN_NAMES = ("euclidean_norm", "abs_sum", "max_affine", "sphere_valley", "constant", "linear")
NOISE_NAMES = ("none", "additive_scalar", "additive_linear", "intercept")


class NoiseFamily:
    """Distribution Xi of noise payloads and how a payload enters F."""

    name = "none"
    payload_shape: tuple[int, ...] = (0,)
    # A common additive offset cancels in F(x+;xi) - F(x-;xi).
    common_offset = False

    def sample(self, rng: np.random.Generator, size: int | tuple[int, ...] | None = None) -> np.ndarray:
        shape = () if size is None else (size,) if isinstance(size, int) else tuple(size)
        return np.zeros(shape + self.payload_shape)

    def apply(self, base_values: np.ndarray, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
        return base_values

    def extra_lipschitz(self, xi: np.ndarray) -> np.ndarray:
        """Lipschitz constant added to the base function's by the payload."""
        return np.zeros(np.shape(xi)[: np.ndim(xi) - len(self.payload_shape)])

    @property
    def extra_lipschitz_bound(self) -> float:
        return 0.0

    def describe(self) -> dict:
        return {"family": self.name}


class NoNoise(NoiseFamily):
    pass


@dataclass
class AdditiveScalarNoise(NoiseFamily):
    """F(x; xi) = f0(x) + xi with xi ~ Unif[-half_width, half_width]."""

    half_width: float = 1.0
    name = "additive_scalar"
    payload_shape = ()
    common_offset = True

    def sample(self, rng, size=None):
        return rng.uniform(-self.half_width, self.half_width, size=size)

    def apply(self, base_values, x, xi):
        return base_values + xi

    def extra_lipschitz(self, xi):
        return np.zeros(np.shape(xi))

    def describe(self):
        return {"family": self.name, "half_width": self.half_width}


@dataclass
class AdditiveLinearNoise(NoiseFamily):
    """F(x; xi) = f0(x) + <xi, x> with xi uniform in the ball of the given radius.

    The payload has mean zero, so the expected objective is still ``f0``, while
    each component is ``(L_f0 + |xi|)``-Lipschitz.
    """

    dimension: int = 1
    radius: float = 0.5
    name = "additive_linear"

    @property
    def payload_shape(self):
        return (self.dimension,)

    def sample(self, rng, size=None):
        from zo_goldstein.smoothing import sample_unit_ball

        return self.radius * sample_unit_ball(self.dimension, rng, size=size)

    def apply(self, base_values, x, xi):
        return base_values + np.einsum("...i,...i->...", xi, x)

    def extra_lipschitz(self, xi):
        return np.linalg.norm(xi, axis=-1)

    @property
    def extra_lipschitz_bound(self):
        return self.radius

    def describe(self):
        return {"family": self.name, "radius": self.radius}


@dataclass
class InterceptNoise(NoiseFamily):
    """Per-piece intercept perturbations of a max-affine function, xi ~ Unif[-scale, scale]^pieces.

    Slopes are untouched so every component keeps the base Lipschitz constant.
    The expected objective is E[max_i(a_i.x + b_i + xi_i)], which has no closed
    form, so objectives using this family carry no gradient oracle.
    """

    pieces: int = 1
    scale: float = 0.1
    name = "intercept"

    @property
    def payload_shape(self):
        return (self.pieces,)

    def sample(self, rng, size=None):
        shape = () if size is None else (size,) if isinstance(size, int) else tuple(size)
        return rng.uniform(-self.scale, self.scale, size=shape + (self.pieces,))

    def apply(self, base_values, x, xi):
        raise UsageError("intercept noise is applied inside the max-affine evaluation")

    def describe(self):
        return {"family": self.name, "scale": self.scale, "pieces": self.pieces}


@dataclass(frozen=True)
class StochasticObjective:
    """A stochastic objective satisfying the bounded-second-moment Lipschitz assumption.

    ``base`` maps ``(..., d)`` points to values of the noiseless function;
    ``gradient`` (if present) returns a gradient of the expected objective
    ``f = E[F]``, with a fixed Clarke-subgradient selection at kinks.
    """

    name: str
    dimension: int
    lipschitz_bound: float
    base: ArrayFn
    base_lipschitz: float
    noise: NoiseFamily = field(default_factory=NoNoise)
    gradient: ArrayFn | None = None
    known_infimum: float | None = None
    params: Mapping[str, object] = field(default_factory=dict)
    # Replaces ``base`` when the noise payload enters inside the function (max-affine intercepts).
    component: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    # (slopes, intercepts) for max-affine objectives
    pieces: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def component_family(self) -> dict:
        return self.noise.describe()

    def values(self, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """Batched F(x; xi) without argument checks."""
        if self.component is not None:
            return self.component(x, xi)
        return self.noise.apply(self.base(x), x, xi)

    def difference(self, x_plus: np.ndarray, x_minus: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """F(x_plus; xi) - F(x_minus; xi) under one shared payload."""
        if self.noise.common_offset:
            # (f0(a) + xi) - (f0(b) + xi), with the offset removed before rounding
            return self.base(x_plus) - self.base(x_minus)
        return self.values(x_plus, xi) - self.values(x_minus, xi)

    def component_lipschitz(self, xi: np.ndarray) -> np.ndarray:
        """L(xi) for each realized payload."""
        return self.base_lipschitz + self.noise.extra_lipschitz(np.asarray(xi, dtype=float))

    def mean_value(self, x: np.ndarray) -> float:
        """f(x) when noise has zero mean effect, i.e. every family except intercept."""
        if self.component is not None:
            raise UnsupportedOperationError(f"{self.name}: expected value has no closed form under intercept noise")
        return float(self.base(np.asarray(x, dtype=float)))

    def check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.shape[0] != self.dimension:
            raise UsageError(f"{self.name}: expected a point of dimension {self.dimension}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise UsageError(f"{self.name}: point has non-finite coordinates")
        return x


def evaluate(obj: StochasticObjective, x, xi) -> float:
    """F(x; xi) at a single point."""
    x = obj.check_point(x)
    return float(obj.values(x, np.asarray(xi, dtype=float)))


def sample_component(obj: StochasticObjective, rng: np.random.Generator, size=None) -> np.ndarray:
    """Draw i.i.d. noise payloads from Xi."""
    return obj.noise.sample(rng, size=size)


def reference_gradient(obj: StochasticObjective, x) -> np.ndarray:
    """Exact gradient of f at a differentiable point.

    At kinks a fixed selection is returned: the gradient of the first active
    piece in the objective's piece ordering.
    """
    if obj.gradient is None:
        raise UnsupportedOperationError(f"{obj.name} has no exact-gradient oracle")
    return obj.gradient(obj.check_point(x))


# --- catalog -------------------------------------------------------------


def _norm(x):
    return np.sqrt(np.einsum("...i,...i->...", x, x))


def _euclidean_norm(d, params):
    def grad(x):
        r = _norm(x)[..., None]
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(r > 0, x / r, 0.0)

    return dict(base=_norm, base_lipschitz=1.0, gradient=grad, known_infimum=0.0)


def _abs_sum(d, params):
    def base(x):
        return np.abs(x).sum(axis=-1)

    def grad(x):
        # |t| = max(t, -t); ties pick the first piece, +t
        return np.where(x >= 0, 1.0, -1.0)

    return dict(base=base, base_lipschitz=float(np.sqrt(d)), gradient=grad, known_infimum=0.0)


def _sphere_valley(d, params):
    def base(x):
        return np.abs(_norm(x) - 1.0)

    def grad(x):
        # |r - 1| = max(r - 1, 1 - r); ties pick r - 1. At the origin 0 is returned.
        r = _norm(x)[..., None]
        sign = np.where(r >= 1.0, 1.0, -1.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(r > 0, sign * x / r, 0.0)

    return dict(base=base, base_lipschitz=1.0, gradient=grad, known_infimum=0.0)


def _constant(d, params):
    c = float(params.get("value", 0.0))

    def base(x):
        return np.full(np.shape(x)[:-1], c)

    def grad(x):
        return np.zeros_like(x)

    # L0 must be positive; any positive bound is valid for a constant
    return dict(base=base, base_lipschitz=0.0, lipschitz_floor=1.0, gradient=grad, known_infimum=c)


def _linear(d, params):
    a = _vector_param(params, "slope", d, default=np.eye(d)[0])

    def base(x):
        return x @ a

    def grad(x):
        return np.broadcast_to(a, np.shape(x)).copy()

    return dict(base=base, base_lipschitz=float(np.linalg.norm(a)), gradient=grad, known_infimum=None)


def _max_affine(d, params):
    if "slopes" in params:
        A = np.atleast_2d(np.asarray(params["slopes"], dtype=float))
        b = np.asarray(params.get("intercepts", np.zeros(A.shape[0])), dtype=float)
    elif "pieces" in params:
        pieces = int(params["pieces"])
        if pieces < 1:
            raise UsageError("max_affine: pieces must be >= 1")
        rng = np.random.default_rng(int(params.get("seed", 0)))
        A = rng.standard_normal((pieces, d))
        A /= np.linalg.norm(A, axis=1, keepdims=True)
        b = rng.uniform(-0.5, 0.5, pieces)
    else:
        # max_i(+-x_i): the l-infinity norm
        A = np.concatenate([np.eye(d), -np.eye(d)])
        b = np.zeros(2 * d)
    if A.shape[1] != d or b.shape != (A.shape[0],):
        raise UsageError(f"max_affine: slopes must be (pieces, {d}) and intercepts (pieces,)")

    def base(x):
        return (x @ A.T + b).max(axis=-1)

    def grad(x):
        # argmax returns the first maximal piece
        return A[np.argmax(x @ A.T + b, axis=-1)]

    def component(x, xi):
        return (x @ A.T + b + xi).max(axis=-1)

    inf = 0.0 if "slopes" not in params and "pieces" not in params else None
    return dict(
        base=base,
        base_lipschitz=float(np.linalg.norm(A, axis=1).max()),
        gradient=grad,
        known_infimum=inf,
        slopes=A,
        intercepts=b,
        component=component,
    )


_BUILDERS = {
    "euclidean_norm": _euclidean_norm,
    "abs_sum": _abs_sum,
    "max_affine": _max_affine,
    "sphere_valley": _sphere_valley,
    "constant": _constant,
    "linear": _linear,
}


def _vector_param(params, key, d, default=None):
    if key not in params:
        if default is None:
            raise UsageError(f"missing parameter {key!r}")
        return np.asarray(default, dtype=float)
    v = np.asarray(params[key], dtype=float).reshape(-1)
    if v.shape != (d,):
        raise UsageError(f"parameter {key!r} must have length {d}")
    return v


def make_builtin(name: str, d: int, params: Mapping[str, object] | None = None) -> StochasticObjective:
    """Build a catalog objective from ``(name, d, params)``.

    Recognized ``params`` keys: ``noise`` (one of ``NOISE_NAMES``),
    ``half_width`` (additive_scalar), ``radius`` (additive_linear), ``scale``
    (intercept, max_affine only), and per-objective keys ``value``, ``slope``,
    ``slopes``, ``intercepts``, ``pieces``, ``seed``.
    """
    params = dict(params or {})
    if name not in _BUILDERS:
        raise UsageError(f"unknown objective {name!r}; choose from {', '.join(BUILTIN_NAMES)}")
    if not isinstance(d, (int, np.integer)) or isinstance(d, bool) or d < 1:
        raise UsageError(f"dimension must be a positive integer, got {d!r}")
    d = int(d)
    built = _BUILDERS[name](d, params)

    noise_name = str(params.get("noise", "none"))
    component = None
    gradient = built["gradient"]
    if noise_name == "none":
        noise = NoNoise()
    elif noise_name == "additive_scalar":
        noise = AdditiveScalarNoise(half_width=_positive(params, "half_width", 1.0))
    elif noise_name == "additive_linear":
        noise = AdditiveLinearNoise(dimension=d, radius=_positive(params, "radius", 0.5))
    elif noise_name == "intercept":
        if name != "max_affine":
            raise UsageError("intercept noise only applies to max_affine")
        noise = InterceptNoise(pieces=built["slopes"].shape[0], scale=_positive(params, "scale", 0.1))
        component = built["component"]
        gradient = None
    else:
        raise UsageError(f"unknown noise family {noise_name!r}; choose from {', '.join(NOISE_NAMES)}")

    base_l = built["base_lipschitz"]
    lipschitz = max(base_l + noise.extra_lipschitz_bound, built.get("lipschitz_floor", 0.0))
    if not lipschitz > 0:
        lipschitz = 1.0
    return StochasticObjective(
        name=name,
        dimension=d,
        lipschitz_bound=float(lipschitz),
        base=built["base"],
        base_lipschitz=float(base_l),
        noise=noise,
        gradient=gradient,
        known_infimum=built["known_infimum"] if component is None else None,
        params=params,
        component=component,
        pieces=(built["slopes"], built["intercepts"]) if "slopes" in built else None,
    )


def _positive(params, key, default):
    v = float(params.get(key, default))
    if not (np.isfinite(v) and v > 0):
        raise UsageError(f"parameter {key!r} must be positive and finite, got {v}")
    return v
