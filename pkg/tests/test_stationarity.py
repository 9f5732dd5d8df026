import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import simplex_grid_min_norm
from zo_goldstein.errors import ConvergenceError, UnsupportedOperationError, UsageError
from zo_goldstein.objective import make_builtin
from zo_goldstein.smoothing import sample_unit_ball, smoothed_grad_mc
from zo_goldstein.stationarity import (
    goldstein_upper_certificate,
    min_norm_in_hull,
    window_certificate,
)


# --- Wolfe min-norm point ---


def test_min_norm_examples():
    g, lam = min_norm_in_hull([[1.0, 0.0], [-1.0, 0.0]])
    assert np.allclose(g, 0) and np.allclose(lam, [0.5, 0.5])
    g, lam = min_norm_in_hull([[1.0, 0.0]])
    assert np.array_equal(g, [1, 0]) and np.array_equal(lam, [1])
    g, lam = min_norm_in_hull([[2.0, 0.0], [0.0, 1.0]])
    assert np.allclose(g, [0.4, 0.8], atol=1e-12)
    assert np.linalg.norm(g) == pytest.approx(np.sqrt(0.8), abs=1e-12)


def test_min_norm_duplicates_and_interior_points():
    P = [[1.0, 1.0], [1.0, 1.0], [2.0, 2.0], [1.5, 1.5]]
    g, lam = min_norm_in_hull(P)
    assert np.allclose(g, [1, 1])


def test_min_norm_errors():
    with pytest.raises(UsageError):
        min_norm_in_hull([])
    with pytest.raises(UsageError):
        min_norm_in_hull([[np.nan, 0.0]])
    with pytest.raises(ConvergenceError) as info:
        min_norm_in_hull(np.eye(6) + 0.01, max_iter=1)
    assert info.value.residual > 0


vec_sets = st.integers(1, 8).flatmap(
    lambda d: st.lists(arrays(np.float64, d, elements=st.floats(-10, 10)), min_size=1, max_size=12)
)


@settings(max_examples=300, deadline=None)
@given(vec_sets)
def test_min_norm_feasible_and_optimal(vs):
    P = np.array(vs)
    tol = 1e-9
    g, lam = min_norm_in_hull(P, tol=tol)
    assert np.all(lam >= 0) and lam.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(lam @ P, g, atol=1e-9)
    gg = g @ g
    # the stall fallback accepts sqrt(tol)
    assert np.min(P @ g) - gg >= -np.sqrt(tol) * (1 + gg) * max(1.0, np.abs(P).max())


@pytest.mark.parametrize("seed", range(5))
def test_min_norm_matches_grid_oracle(seed):
    rng = np.random.default_rng(seed)
    for _ in range(10):
        n, d = rng.integers(1, 6), rng.integers(1, 4)
        P = rng.uniform(-1, 1, size=(n, d))
        g, _ = min_norm_in_hull(P)
        ref = simplex_grid_min_norm(P, step=1e-3)
        assert np.linalg.norm(g - ref) <= 2e-3
        # the exact minimum can never exceed the grid minimum
        assert np.linalg.norm(g) <= np.linalg.norm(ref) + 1e-9


# --- sampled-hull certificate ---


def test_hull_certificate_abs_examples(rng):
    obj = make_builtin("abs_sum", 1)
    c0 = goldstein_upper_certificate(obj, [0.0], 0.5, 100, rng)
    assert c0.value == pytest.approx(0.0, abs=1e-12) and c0.method == "sampled_hull"
    c1 = goldstein_upper_certificate(obj, [1.0], 0.5, 100, rng)
    assert c1.value == 1.0 and c1.standard_error == 0 and c1.n_gradients == 100
    assert c1.as_row() == {"method": "sampled_hull", "delta": 0.5, "value": 1.0, "stderr": 0.0, "n": 100}


def test_hull_certificate_sphere_valley_kink(rng):
    obj = make_builtin("sphere_valley", 2)
    x = np.array([np.cos(0.3), np.sin(0.3)])
    assert goldstein_upper_certificate(obj, x, 0.1, 1000, rng).value <= 0.05


def test_hull_certificate_far_from_kink(rng):
    obj = make_builtin("sphere_valley", 3)
    c = goldstein_upper_certificate(obj, [3.0, 0, 0], 0.1, 500, rng)
    # every sampled gradient is a unit vector within angle asin(0.1/3) of e1
    assert np.sqrt(1 - (0.1 / 2.9) ** 2) - 1e-9 <= c.value <= 1.0


def test_hull_certificate_requires_gradient(rng):
    obj = make_builtin("max_affine", 2, {"pieces": 3, "seed": 0, "noise": "intercept"})
    with pytest.raises(UnsupportedOperationError):
        goldstein_upper_certificate(obj, [0.0, 0.0], 0.1, 10, rng)


def test_hull_certificate_more_samples_rarely_worse():
    obj = make_builtin("max_affine", 3, {"pieces": 6, "seed": 3})
    x = np.zeros(3)
    small = np.mean([goldstein_upper_certificate(obj, x, 0.2, 5, np.random.default_rng(s)).value for s in range(40)])
    big = np.mean([goldstein_upper_certificate(obj, x, 0.2, 200, np.random.default_rng(s)).value for s in range(40)])
    assert big <= small


@pytest.mark.parametrize("name,params", [("abs_sum", {}), ("max_affine", {"pieces": 6, "seed": 3}), ("sphere_valley", {})])
def test_hull_certificate_monotone_in_delta(name, params):
    obj = make_builtin(name, 3, params)
    x = np.array([0.05, -0.02, 0.9]) if name == "sphere_valley" else np.array([0.05, -0.02, 0.01])
    v1 = goldstein_upper_certificate(obj, x, 0.05, 2000, np.random.default_rng(1)).value
    v2 = goldstein_upper_certificate(obj, x, 0.2, 2000, np.random.default_rng(2)).value
    # sampled-hull certificates carry no MC standard error
    assert v2 <= v1 + 1e-9


# --- window certificate ---


def test_window_certificate_constant_exact(rng):
    obj = make_builtin("constant", 3)
    cert = window_certificate(obj, rng.normal(size=(7, 3)), 0.1, 100, rng)
    assert cert.value == 0.0 and cert.standard_error == 0.0 and cert.method == "window_average"


def test_window_certificate_linear(rng):
    obj = make_builtin("linear", 2, {"slope": [0.3, 0.4]})
    Z = 0.01 * rng.normal(size=(5, 2))
    cert = window_certificate(obj, Z, 0.05, 20000, rng)
    assert abs(cert.value - 0.5) <= 3 * cert.standard_error
    assert cert.n_gradients == 100000
    nu = np.linalg.norm(Z - Z.mean(axis=0), axis=1).max()
    assert cert.delta == pytest.approx(0.05 + nu)
    assert window_certificate(obj, Z, 0.05, 10, rng, nu=0.2).delta == pytest.approx(0.25)


def test_window_certificate_single_point_reduces():
    obj = make_builtin("euclidean_norm", 3)
    z = np.array([0.3, -0.1, 0.2])
    cert = window_certificate(obj, z[None, :], 0.1, 5000, np.random.default_rng(4))
    ref = smoothed_grad_mc(obj, z, 0.1, 200000, np.random.default_rng(5))
    assert cert.delta == pytest.approx(0.1)
    assert abs(cert.value - np.linalg.norm(ref.mean)) <= 3 * np.hypot(cert.standard_error, np.linalg.norm(ref.stderr))


def test_window_certificate_dimension_check(rng):
    obj = make_builtin("euclidean_norm", 3)
    with pytest.raises(UsageError):
        window_certificate(obj, np.zeros((2, 4)), 0.1, 10, rng)
    with pytest.raises(UsageError):
        window_certificate(obj, np.zeros((2, 3)), 0.1, 0, rng)


@pytest.mark.parametrize(
    "name,params,x",
    [
        ("abs_sum", {}, [0.02, -0.05, 0.0]),
        ("max_affine", {}, [0.01, 0.03, -0.02]),
        ("max_affine", {"pieces": 6, "seed": 3}, [0.0, 0.0, 0.0]),
        ("max_affine", {"pieces": 6, "seed": 3}, [0.1, -0.1, 0.05]),
    ],
)
def test_smoothed_gradient_inside_goldstein_hull(name, params, x, rng):
    obj = make_builtin(name, 3, params)
    rho = 0.1
    est = smoothed_grad_mc(obj, x, rho, 200000, rng)
    grads = obj.gradient(np.asarray(x) + rho * sample_unit_ball(3, rng, size=4000))
    diff, _ = min_norm_in_hull(grads - est.mean)
    assert np.linalg.norm(diff) <= 3 * np.linalg.norm(est.stderr)
