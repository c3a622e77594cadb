"""Experiment configuration: defaults, TOML loading and validation.

A configuration file is TOML with a mandatory ``schema_version``; every
other key is optional and overrides the defaults below. Example::

    schema_version = 1
    seed = 0
    tasks = ["figure1", "grid", "initvals"]
    presets = ["integration-step", "convolution-hat"]

    [problem]
    n = 128
    psnr = { integration = 40.0, convolution = 45.0 }

    [grid]
    alpha2 = { integration = [0.01, 0.1], convolution = [0.1, 1.0] }
"""

import sys
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from ..errors import InvalidParameterError
from .problems import OPERATOR_KINDS, TRUTH_NAMES

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "SCHEMA_VERSION",
    "TASKS",
    "PRESET_IDS",
    "ProblemConfig",
    "GridConfig",
    "MethodConfig",
    "Figure1Config",
    "InitValueConfig",
    "ExperimentConfig",
    "split_preset",
    "load_config",
    "config_from_dict",
]

SCHEMA_VERSION = 1
TASKS = ("figure1", "grid", "initvals")
PRESET_IDS = tuple(f"{k}-{t}" for k in OPERATOR_KINDS for t in TRUTH_NAMES)


def split_preset(preset):
    """``"integration-step"`` -> ``("integration", "step")``."""
    kind, _, truth = preset.partition("-")
    if kind not in OPERATOR_KINDS or truth not in TRUTH_NAMES:
        raise InvalidParameterError(f"unknown preset {preset!r}; expected one of {PRESET_IDS}")
    return kind, truth


def _logs(lo, hi, num=5):
    return tuple(float(v) for v in np.logspace(np.log10(lo), np.log10(hi), num))


@dataclass(frozen=True)
class ProblemConfig:
    n: int = 128
    interval: tuple = (0.0, 1.0)
    sigma: float = 0.03
    psnr: dict = field(default_factory=lambda: {"integration": 40.0, "convolution": 45.0})
    alpha: float = 1.0


@dataclass(frozen=True)
class GridConfig:
    """Log-spaced elastic-net weights searched a posteriori, per operator kind.

    Two-element lists are expanded to ``points`` log-spaced values.
    """

    alpha1: dict = field(default_factory=lambda: {"integration": (1e-4, 1e-1),
                                                  "convolution": (1e-4, 1e-1)})
    alpha2: dict = field(default_factory=lambda: {"integration": (1e-2, 1e-1),
                                                  "convolution": (1e-1, 1.0)})
    points: int = 5

    def values(self, which, kind):
        v = tuple(float(a) for a in getattr(self, which)[kind])
        if len(v) == 2 and self.points != 2:
            return _logs(v[0], v[1], self.points)
        return v


@dataclass(frozen=True)
class MethodConfig:
    iters: int = 2000
    ift_lr: float = 1.0
    lista_inf_lr: float = 0.5
    lista_lr: float = 0.5
    depth: int = 10
    block_depth: int = 10
    inner_tol: float = 1e-11


@dataclass(frozen=True)
class Figure1Config:
    alpha: float = 0.01
    lr: float = 1.0
    iters: int = 2000
    tau: float = 1.1
    tikhonov_grid: tuple = _logs(1e-8, 1.0, 41)


@dataclass(frozen=True)
class InitValueConfig:
    starts: int = 2
    perturbation: float = 0.05
    iters: int = 2000


@dataclass(frozen=True)
class ExperimentConfig:
    schema_version: int = SCHEMA_VERSION
    seed: int = 0
    out: str = "adp_lab_out"
    tasks: tuple = TASKS
    presets: tuple = PRESET_IDS
    record_wall_time: bool = False
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    methods: MethodConfig = field(default_factory=MethodConfig)
    figure1: Figure1Config = field(default_factory=Figure1Config)
    initvals: InitValueConfig = field(default_factory=InitValueConfig)

    def __post_init__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise InvalidParameterError(
                f"unsupported schema_version {self.schema_version}; this build reads {SCHEMA_VERSION}")
        for t in self.tasks:
            if t not in TASKS:
                raise InvalidParameterError(f"unknown task {t!r}; expected one of {TASKS}")
        for p in self.presets:
            split_preset(p)
        for kind, v in self.problem.psnr.items():
            if not v > 0:
                raise InvalidParameterError(f"PSNR for {kind} must be positive, got {v}")
        if not self.problem.alpha > 0 or not self.figure1.alpha > 0:
            raise InvalidParameterError("alpha must be positive")
        if not self.figure1.tau > 1:
            raise InvalidParameterError("discrepancy factor tau must exceed 1")
        if self.initvals.starts < 2:
            raise InvalidParameterError("the initial-value study needs at least 2 starts")

    def preset_seed(self, preset):
        """Per-cell seed: master seed plus the preset's fixed index."""
        return self.seed + PRESET_IDS.index(preset)

    def with_overrides(self, **kw):
        return replace(self, **kw)

    def as_dict(self):
        return asdict(self)


_SECTIONS = {"problem": ProblemConfig, "grid": GridConfig, "methods": MethodConfig,
             "figure1": Figure1Config, "initvals": InitValueConfig}


def _build(cls, data, where):
    known = {f.name for f in fields(cls)}
    extra = set(data) - known
    if extra:
        raise InvalidParameterError(f"unknown keys in [{where}]: {sorted(extra)}")
    kw = {}
    for k, v in data.items():
        if isinstance(v, list):
            v = tuple(v)
        elif isinstance(v, dict):
            v = {kk: tuple(vv) if isinstance(vv, list) else vv for kk, vv in v.items()}
        kw[k] = v
    return cls(**kw)


def config_from_dict(data):
    """Build a validated :class:`ExperimentConfig` from parsed TOML data."""
    data = dict(data)
    if "schema_version" not in data:
        raise InvalidParameterError("config is missing schema_version")
    sections = {}
    for name, cls in _SECTIONS.items():
        if name in data:
            sections[name] = _build(cls, data.pop(name), name)
    top = _build(ExperimentConfig, data, "top level")
    return replace(top, **sections)


def load_config(path):
    with open(path, "rb") as fh:
        return config_from_dict(tomllib.load(fh))
