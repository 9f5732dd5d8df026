import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from zo_goldstein.errors import ConfigurationError, NumericalFault
from zo_goldstein.objective import make_builtin
from zo_goldstein.optimizer import (
    OptimizerConfig,
    baseline_sgd_smoothed,
    clip_to_ball,
    derive_hyperparams,
    run,
)
from zo_goldstein.stationarity import window_certificate


def hand_config(Delta, L0, delta, eps, d, c_T, T_int=None):
    """Independent transcription of the hyper-parameter formulas.

    Returns the raw (unrounded) budget; D and eta use ``T_int`` when given.
    """
    rho = min(delta / 2, Delta / L0)
    nu = max(delta / 2, delta - Delta / L0)
    T_raw = c_T * d * L0**2 * (Delta + rho * L0) / (nu * eps**3)
    T = T_int if T_int is not None else math.ceil(T_raw)
    D = ((Delta + rho * L0) * math.sqrt(nu) / (math.sqrt(d) * L0 * T)) ** (2 / 3)
    eta = (Delta + rho * L0) / (d * L0**2 * T)
    return rho, nu, T_raw, D, eta


def test_derive_branch_small_gap():
    cfg = derive_hyperparams(0.05, 1.0, 0.2, 0.1, 4, 1.0)
    assert cfg.rho == 0.05 and cfg.nu == pytest.approx(0.15) and cfg.rho + cfg.nu == 0.2


def test_derive_worked_example():
    cfg = derive_hyperparams(1.0, 1.0, 0.2, 0.1, 4, 1.0)
    assert (cfg.rho, cfg.nu, cfg.T) == (0.1, 0.1, 44000)
    assert cfg.eta == pytest.approx(6.25e-6, rel=1e-12)
    assert cfg.D == pytest.approx((1.1 * math.sqrt(0.1) / (2 * 44000)) ** (2 / 3), rel=1e-12)
    assert cfg.D == pytest.approx(2.48e-4, rel=0.01)


def test_derive_branch_large_gap():
    cfg = derive_hyperparams(10.0, 1.0, 0.2, 0.1, 4, 1.0)
    assert cfg.rho == 0.1 and cfg.nu == 0.1


@settings(max_examples=200, deadline=None)
@given(
    st.floats(1e-3, 100),
    st.floats(0.1, 10),
    st.floats(1e-3, 0.999),
    st.floats(0.05, 0.999),
    st.integers(1, 200),
    st.floats(1e-3, 10),
)
def test_derive_properties(Delta, L0, delta, eps, d, c_T):
    try:
        cfg = derive_hyperparams(Delta, L0, delta, eps, d, c_T)
    except ConfigurationError as exc:
        assert "M" in str(exc) or "K" in str(exc)
        return
    assert cfg.rho + cfg.nu == delta
    assert cfg.M >= 1 and cfg.K >= 1
    rho, nu, T, D, eta = hand_config(Delta, L0, delta, eps, d, c_T, T_int=cfg.T)
    assert cfg.rho == pytest.approx(rho, rel=1e-14) and cfg.nu == pytest.approx(nu, rel=1e-12)
    # T is the ceiling of the raw budget, up to float slack at integer boundaries
    assert T * (1 - 1e-9) <= cfg.T < T * (1 + 1e-9) + 1
    assert cfg.D == pytest.approx(D, rel=1e-9) and cfg.eta == pytest.approx(eta, rel=1e-12)


def test_config_rejects_violated_floors():
    with pytest.raises(ConfigurationError, match="M"):
        OptimizerConfig(rho=0.1, nu=0.1, D=0.2, eta=1e-3, T=10)
    with pytest.raises(ConfigurationError, match="K"):
        OptimizerConfig(rho=0.1, nu=0.1, D=0.01, eta=1e-3, T=5)
    with pytest.raises(ConfigurationError):
        OptimizerConfig(rho=-0.1, nu=0.1, D=0.01, eta=1e-3, T=50)
    with pytest.raises(ConfigurationError):
        OptimizerConfig(rho=0.1, nu=math.inf, D=0.01, eta=1e-3, T=50)
    # tiny budgets make the clip radius exceed nu
    with pytest.raises(ConfigurationError, match="M"):
        derive_hyperparams(1.0, 1.0, 0.2, 0.1, 4, T=3)


def test_clip_examples():
    assert np.array_equal(clip_to_ball(np.array([3.0, 4.0]), 5.0), [3, 4])
    assert np.allclose(clip_to_ball(np.array([3.0, 4.0]), 1.0), [0.6, 0.8])
    assert np.array_equal(clip_to_ball(np.zeros(2), 1.0), [0, 0])


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=8), st.floats(1e-9, 1e3))
def test_clip_never_exceeds_radius(v, D):
    out = clip_to_ball(np.array(v), D)
    assert np.linalg.norm(out) <= D or np.array_equal(out, v)
    if np.linalg.norm(v) <= D:
        assert np.array_equal(out, v)


def small_config(T=600, nu=0.05, D=0.01, eta=1e-3, rho=0.1, k=1):
    return OptimizerConfig(rho=rho, nu=nu, D=D, eta=eta, T=T, k=k)


def test_constant_objective_is_fixed_point(rng):
    obj = make_builtin("constant", 3)
    x0 = np.array([1.0, -2.0, 0.5])
    res = run(obj, x0, small_config(), rng)
    assert np.array_equal(res.x_out, x0)
    assert np.all(res.window_points == x0)
    assert np.all(res.norm_delta == 0)


def test_window_bookkeeping(rng):
    obj = make_builtin("sphere_valley", 2)
    cfg = OptimizerConfig(rho=0.1, nu=0.03, D=0.01, eta=1e-2, T=6)
    assert (cfg.M, cfg.K) == (3, 2)
    res = run(obj, np.array([2.0, 0.0]), cfg, rng, z_log_stride=1)
    zs = np.array([z for _, _, z in res.z_log])
    xs = np.array([x for _, x, _ in res.z_log])
    # z_t lies on the segment from x_{t-1} to x_t
    prev = np.vstack([[2.0, 0.0], xs[:-1]])
    for a, b, z in zip(prev, xs, zs):
        assert np.linalg.norm(z - a) + np.linalg.norm(b - z) == pytest.approx(np.linalg.norm(b - a), abs=1e-12)
    assert np.allclose(res.window_means[0], zs[:3].mean(axis=0))
    assert np.allclose(res.window_means[1], zs[3:].mean(axis=0))
    chosen = zs[3 * (res.chosen_window - 1) : 3 * res.chosen_window]
    assert np.array_equal(res.window_points, chosen)
    assert np.array_equal(res.x_out, chosen.mean(axis=0))


def test_trailing_iterations_are_not_windowed(rng):
    obj = make_builtin("sphere_valley", 2)
    cfg = OptimizerConfig(rho=0.1, nu=0.03, D=0.01, eta=1e-2, T=8)
    assert cfg.K == 2
    res = run(obj, np.array([2.0, 0.0]), cfg, rng)
    assert res.window_means.shape == (2, 2) and len(res.norm_delta) == 8


@pytest.mark.parametrize("k", [1, 3])
def test_invariants_and_accounting(k, rng):
    obj = make_builtin("sphere_valley", 5, {"noise": "additive_linear", "radius": 0.3})
    cfg = small_config(T=5000, k=k)
    res = run(obj, np.array([2.0, 0, 0, 0, 0]), cfg, rng)
    assert res.norm_delta.max() <= cfg.D
    assert res.max_window_radius <= (cfg.M - 1) * cfg.D <= cfg.nu
    assert np.linalg.norm(res.window_points - res.x_out, axis=1).max() <= cfg.nu
    assert res.evaluations_used == 2 * k * cfg.T
    assert 1 <= res.chosen_window <= cfg.K


def test_reproducible_bit_identical():
    obj = make_builtin("abs_sum", 4, {"noise": "additive_scalar"})
    cfg = small_config(T=2000)
    a = run(obj, np.ones(4), cfg, np.random.default_rng(3))
    b = run(obj, np.ones(4), cfg, np.random.default_rng(3))
    assert np.array_equal(a.x_out, b.x_out) and a.chosen_window == b.chosen_window
    assert np.array_equal(a.norm_g, b.norm_g) and np.array_equal(a.window_points, b.window_points)


def test_linear_objective_window_certificate(rng):
    obj = make_builtin("linear", 2, {"slope": [1.0, 0.0]})
    cfg = small_config(T=3000, D=0.005)
    res = run(obj, np.zeros(2), cfg, rng)
    # moves against the slope at speed at most D
    assert res.x_out[0] < 0
    cert = window_certificate(obj, res.window_points, cfg.rho, 2000, rng)
    assert abs(cert.value - 1.0) <= 3 * cert.standard_error


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_values_fault(rng):
    obj = make_builtin("euclidean_norm", 2)
    cfg = small_config(T=100, eta=1e308, D=1e300, nu=1e301)
    with pytest.raises(NumericalFault) as info:
        run(obj, np.array([1e300, 1e300]), cfg, rng)
    assert info.value.iteration >= 1


def test_baseline_constant_and_linear(rng):
    x0 = np.array([0.5, -1.0])
    assert np.array_equal(baseline_sgd_smoothed(make_builtin("constant", 2), x0, 0.1, 0.01, 50, 1, rng), x0)
    lin = make_builtin("linear", 2, {"slope": [1.0, 0.5]})
    # with one step the output is x0 or x0 - eta * g; with many samples g ~ slope
    for seed in range(20):
        out = baseline_sgd_smoothed(lin, x0, 0.1, 0.01, 2, 200_000, np.random.default_rng(seed))
        if not np.array_equal(out, x0):
            assert np.allclose(out, x0 - 0.01 * np.array([1.0, 0.5]), atol=5e-4)
            break
    else:
        pytest.fail("random iterate never left x0")
