"""Experiment configuration: a flat ``section.key = value`` text format.

Example::

    # sphere valley, distance 2 from the solution set
    objective.name = sphere_valley
    objective.d = 10
    objective.params.noise = additive_scalar
    start.radius = 3.0
    accuracy.delta = 0.1
    accuracy.eps = 0.3
    constants.T = 200000

Values are parsed as JSON when possible (numbers, lists, booleans) and kept
as strings otherwise.  Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from zo_goldstein.errors import ConfigurationError
from zo_goldstein.objective import BUILTIN_NAMES

log = logging.getLogger(__name__)

MODES = ("run", "validated", "sweep", "concentration")
TRACE_LEVELS = ("none", "thin", "full")


@dataclass
class ExperimentConfig:
    objective: str = "sphere_valley"
    d: int = 10
    params: dict = field(default_factory=dict)
    x0: list | None = None
    start_radius: float | None = None

    delta: float = 0.1
    eps: float = 0.3
    gamma: float | None = None

    Delta: float | None = None
    L0: float | None = None

    c_T: float = 1.0
    c_S: float = 1.0
    k: int = 1
    T: int | None = None

    n_hull: int = 2000
    n_window: int | None = None
    window_budget: int = 100_000

    dims: list = field(default_factory=lambda: [4, 16, 64])
    trials: int = 5
    T_start: int = 256
    T_cap: int = 1 << 22

    N: int = 1000
    conc_d: int = 1
    lambdas: list = field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0])
    conc_trials: int = 10_000

    seed: int = 0
    mode: str = "run"
    out: str | None = None
    trace: str = "none"
    trace_stride: int = 100

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.objective not in BUILTIN_NAMES:
            raise ConfigurationError(f"unknown objective {self.objective!r}; choose from {', '.join(BUILTIN_NAMES)}")
        if self.trace not in TRACE_LEVELS:
            raise ConfigurationError(f"trace must be one of {TRACE_LEVELS}, got {self.trace!r}")
        for name in ("delta", "eps"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0):
                raise ConfigurationError(f"accuracy.{name} must be positive, got {v!r}")
            if v >= 1:
                log.warning("accuracy.%s = %g lies outside (0, 1); running anyway", name, v)
        if self.gamma is not None and not (0 < self.gamma < 1):
            raise ConfigurationError(f"accuracy.gamma must lie in (0, 1), got {self.gamma}")
        for name in ("d", "k", "trials", "N", "conc_d", "conc_trials", "n_hull", "T_start", "T_cap"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if list(self.dims) != sorted(self.dims):
            raise ConfigurationError("sweep.dims must be sorted ascending")

    def echo(self) -> dict:
        """Everything that determines the results; the output location is left out."""
        out = asdict(self)
        del out["out"]
        return out


# section.key -> field name
KEYMAP = {
    "objective.name": "objective",
    "objective.d": "d",
    "start.x0": "x0",
    "start.radius": "start_radius",
    "accuracy.delta": "delta",
    "accuracy.eps": "eps",
    "accuracy.gamma": "gamma",
    "theory.Delta": "Delta",
    "theory.L0": "L0",
    "constants.c_T": "c_T",
    "constants.c_S": "c_S",
    "constants.k": "k",
    "constants.T": "T",
    "certificate.n_hull": "n_hull",
    "certificate.n_window": "n_window",
    "certificate.window_budget": "window_budget",
    "sweep.dims": "dims",
    "sweep.trials": "trials",
    "sweep.T_start": "T_start",
    "sweep.T_cap": "T_cap",
    "concentration.N": "N",
    "concentration.d": "conc_d",
    "concentration.lambdas": "lambdas",
    "concentration.trials": "conc_trials",
    "run.seed": "seed",
    "run.mode": "mode",
    "output.dir": "out",
    "output.trace": "trace",
    "output.trace_stride": "trace_stride",
}


def parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_lines(lines) -> dict:
    """Parse ``section.key = value`` lines into a flat dict of raw values."""
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'section.key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = parse_value(value)
    return out


def from_mapping(raw: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    values = asdict(base) if base is not None else {}
    params = dict(values.get("params", {}))
    for key, value in raw.items():
        if key.startswith("objective.params."):
            params[key[len("objective.params."):]] = value
        elif key in KEYMAP:
            values[KEYMAP[key]] = value
        else:
            raise ConfigurationError(f"unknown config key {key!r}")
    values["params"] = params
    names = {f.name for f in fields(ExperimentConfig)}
    return ExperimentConfig(**{k: v for k, v in values.items() if k in names})


def load_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    with open(path) as fh:
        raw = parse_lines(fh)
    raw.update(overrides or {})
    return from_mapping(raw)


def dump_config(cfg: ExperimentConfig) -> str:
    """Serialize back to the text format (round-trips through ``load_config``)."""
    inverse = {v: k for k, v in KEYMAP.items()}
    lines = []
    for name, value in asdict(cfg).items():
        if name == "params":
            lines += [f"objective.params.{k} = {json.dumps(v)}" for k, v in sorted(value.items())]
        elif value is not None:
            lines.append(f"{inverse[name]} = {json.dumps(value) if not isinstance(value, str) else value}")
    return "\n".join(lines) + "\n"
