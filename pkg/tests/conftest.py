import numpy as np
import pytest

from zo_goldstein.objective import make_builtin

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def criterion_log():
    """Collects one pass/fail line per acceptance criterion for the terminal summary."""
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# (name, params) pairs spanning every catalog family, noiseless and noisy
CATALOG = [
    ("euclidean_norm", {}),
    ("abs_sum", {}),
    ("max_affine", {}),
    ("max_affine", {"pieces": 6, "seed": 3}),
    ("sphere_valley", {}),
    ("sphere_valley", {"noise": "additive_scalar", "half_width": 1.0}),
    ("euclidean_norm", {"noise": "additive_linear", "radius": 0.5}),
    ("max_affine", {"pieces": 5, "seed": 1, "noise": "intercept", "scale": 0.2}),
]


def catalog(d):
    return [make_builtin(name, d, params) for name, params in CATALOG]


def catalog_ids():
    return [name + ("+" + p["noise"] if "noise" in p else "") + ("/" + str(p["pieces"]) if "pieces" in p else "") for name, p in CATALOG]
