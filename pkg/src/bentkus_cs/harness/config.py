"""Experiment configuration: JSON file plus command-line overrides."""
from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, field, fields

from ..confseq import METHODS

SCHEMA_VERSION = 1
KINDS = ("coverage", "width", "stopping", "bestarm", "bound-table", "sweep")
DISTRIBUTIONS = ("bernoulli", "uniform-average")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    kind: str = "coverage"
    distribution: str = "bernoulli"
    p: float = 0.1  # bernoulli success probability
    m: int = 10  # uniforms averaged per observation
    methods: list = field(default_factory=lambda: ["A-Bentkus", "A-Hoeffding", "E-Bernstein"])
    delta: float = 0.05
    epsilon: float = 0.1
    horizon: int = 5000
    replications: int = 100
    seed: int = 0
    eta: float = 1.1
    power: float = 1.1
    checkpoints: int = 40  # log-spaced n values reported per replication
    n_arms: int = 5
    arm_exponent: float = 0.6  # arm means 1 - (a / K) ** exponent
    radius: str = "raw"
    max_pulls: int = 10**7
    trace: bool = False
    eta_grid: list = field(default_factory=lambda: [1.05, 1.1, 1.5, 2.0])
    power_grid: list = field(default_factory=lambda: [1.05, 1.1, 1.5, 2.0])
    workers: int = 1
    out: str | None = None
    format: str = "csv"
    schema_version: int = SCHEMA_VERSION

    @property
    def mean(self) -> float:
        return self.p if self.distribution == "bernoulli" else 0.5

    @property
    def std(self) -> float:
        if self.distribution == "bernoulli":
            return math.sqrt(self.p * (1.0 - self.p))
        return math.sqrt(1.0 / (12.0 * self.m))

    def to_dict(self) -> dict:
        return asdict(self)


_FIELD_TYPES = {
    "kind": str, "distribution": str, "p": float, "m": int, "methods": list,
    "delta": float, "epsilon": float, "horizon": int, "replications": int,
    "seed": int, "eta": float, "power": float, "checkpoints": int, "n_arms": int,
    "arm_exponent": float, "radius": str, "max_pulls": int, "trace": bool,
    "eta_grid": list, "power_grid": list, "workers": int, "out": (str, type(None)),
    "format": str, "schema_version": int,
}


def _key_line(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _where(text, key):
    line = _key_line(text, key) if text is not None else None
    return f"line {line}: " if line else ""


def _coerce(name, value, text=None):
    want = _FIELD_TYPES[name]
    if want is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if want is int and isinstance(value, bool):
        raise ConfigError(f"{_where(text, name)}{name} must be an integer")
    if not isinstance(value, want):
        tname = want.__name__ if isinstance(want, type) else "string or null"
        raise ConfigError(f"{_where(text, name)}{name} must be {tname}, got {value!r}")
    return value


def validate(cfg: ExperimentConfig, text: str | None = None) -> ExperimentConfig:
    def bad(key, msg):
        raise ConfigError(f"{_where(text, key)}{key}: {msg}")

    if cfg.schema_version != SCHEMA_VERSION:
        bad("schema_version", f"unsupported version {cfg.schema_version}")
    if cfg.kind not in KINDS:
        bad("kind", f"must be one of {KINDS}")
    if cfg.distribution not in DISTRIBUTIONS:
        bad("distribution", f"must be one of {DISTRIBUTIONS}")
    if not 0.0 <= cfg.p <= 1.0:
        bad("p", "must lie in [0, 1]")
    if cfg.m < 1:
        bad("m", "must be at least 1")
    if not cfg.methods:
        bad("methods", "must not be empty")
    for meth in cfg.methods:
        if meth not in METHODS:
            bad("methods", f"unknown method {meth!r}; choose from {METHODS}")
    if not 0.0 < cfg.delta < 1.0:
        bad("delta", "must lie in (0, 1)")
    if not 0.0 < cfg.epsilon < 1.0:
        bad("epsilon", "must lie in (0, 1)")
    if cfg.horizon < 1:
        bad("horizon", "must be at least 1")
    if cfg.replications < 1:
        bad("replications", "must be at least 1")
    if not 0 <= cfg.seed < 2**64:
        bad("seed", "must be an unsigned 64-bit integer")
    if not cfg.eta > 1.0:
        bad("eta", "must exceed 1")
    if not cfg.power > 1.0:
        bad("power", "must exceed 1")
    if cfg.checkpoints < 1:
        bad("checkpoints", "must be at least 1")
    if cfg.n_arms < 1:
        bad("n_arms", "must be at least 1")
    if cfg.radius not in ("raw", "reported"):
        bad("radius", "must be 'raw' or 'reported'")
    if cfg.max_pulls < 1:
        bad("max_pulls", "must be at least 1")
    if not cfg.eta_grid or any(not e > 1.0 for e in cfg.eta_grid):
        bad("eta_grid", "needs values above 1")
    if not cfg.power_grid or any(not c > 1.0 for c in cfg.power_grid):
        bad("power_grid", "needs values above 1")
    if cfg.workers < 1:
        bad("workers", "must be at least 1")
    if cfg.format not in ("csv", "json"):
        bad("format", "must be 'csv' or 'json'")
    if "Bernstein-fixed" in cfg.methods and cfg.kind in ("stopping", "bestarm"):
        bad("methods", "Bernstein-fixed needs a known variance; not usable here")
    return cfg


def config_from_dict(data: dict, text: str | None = None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level of the config must be an object")
    names = {f.name for f in fields(ExperimentConfig)}
    kwargs = {}
    for key, value in data.items():
        if key not in names:
            raise ConfigError(f"{_where(text, key)}unknown field {key!r}")
        kwargs[key] = _coerce(key, value, text)
    return validate(ExperimentConfig(**kwargs), text)


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}: {exc.msg}") from exc
    return config_from_dict(data, text)


def apply_overrides(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Replace fields whose override is not None, then re-validate."""
    data = cfg.to_dict()
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    return config_from_dict(data)
