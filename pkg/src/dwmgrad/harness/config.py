"""Experiment configuration: JSON schema, validation, presets.

A run config looks like::

    {
      "name": "rosenbrock-dwmgrad",
      "objective": {"name": "rosenbrock"},
      "optimizer": {"name": "dwmgrad", "alpha0": 0.003},
      "iterations": 1000,
      "seed": 0,
      "log_params": true,
      "log_every": 1,
      "start_point": [-1.2, 1.0],
      "stop_loss": null,
      "batch_size": null
    }

``optimizer`` may carry ``"preset": "<dataset>"`` to pull alpha0, omega_init
and delta from :data:`PRESETS`; explicit keys override the preset. Unknown
keys anywhere are rejected.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..errors import ConfigError
from ..objectives import OBJECTIVES
from ..optim import OPTIMIZERS, hyperparameter_names, make_optimizer


@dataclass(frozen=True)
class Preset:
    alpha: float
    batch_size: int
    window: int
    max_window: int


# Published per-dataset settings: learning rate, batch size, W, W_max.
PRESETS = {
    "cifar10": Preset(1e-4, 512, 5, 10),
    "cifar100": Preset(1e-4, 256, 5, 10),
    "imagenet": Preset(1e-4, 64, 5, 8),
    "mnli": Preset(3e-6, 8, 5, 8),
    "qqp": Preset(3e-6, 16, 5, 8),
    "qnli": Preset(3e-6, 16, 5, 10),
    "sst2": Preset(3e-6, 64, 5, 8),
    "cola": Preset(2e-5, 16, 5, 10),
    "stsb": Preset(2e-6, 16, 5, 10),
    "mrpc": Preset(3e-6, 8, 5, 10),
    "rte": Preset(3e-6, 16, 5, 10),
    "cora": Preset(1e-4, 64, 5, 10),
    "pubmed": Preset(1e-4, 64, 5, 10),
    "urbansound8k": Preset(1e-3, 16, 5, 8),
}


def preset_hyperparams(name: str) -> dict:
    try:
        p = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}") from None
    return {"alpha0": p.alpha, "omega_init": p.window, "delta": p.max_window}


@dataclass(frozen=True)
class ExperimentConfig:
    objective: str
    optimizer: str
    objective_params: dict = field(default_factory=dict)
    hyperparams: dict = field(default_factory=dict)
    iterations: int = 1000
    seed: int = 0
    log_params: bool = True
    log_every: int = 1
    start_point: Optional[tuple] = None
    stop_loss: Optional[float] = None
    batch_size: Optional[int] = None
    name: Optional[str] = None

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"unknown objective {self.objective!r}; expected one of {OBJECTIVES}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}; expected one of {OPTIMIZERS}")
        _require_int("iterations", self.iterations, 1)
        _require_int("log_every", self.log_every, 1)
        _require_int("seed", self.seed, None)
        if self.batch_size is not None:
            _require_int("batch_size", self.batch_size, 1)
        if not isinstance(self.log_params, bool):
            raise ConfigError("log_params must be true or false")
        if self.start_point is not None:
            object.__setattr__(self, "start_point", tuple(float(v) for v in self.start_point))
        # fail early on bad hyperparameter names or values
        make_optimizer(self.optimizer, **self.hyperparams)

    @property
    def label(self) -> str:
        return self.name or f"{self.objective}-{self.optimizer}"

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "objective": {"name": self.objective, **self.objective_params},
            "optimizer": {"name": self.optimizer, **self.hyperparams},
            "iterations": self.iterations,
            "seed": self.seed,
            "log_params": self.log_params,
            "log_every": self.log_every,
            "start_point": None if self.start_point is None else list(self.start_point),
            "stop_loss": self.stop_loss,
            "batch_size": self.batch_size,
        }


def _require_int(name, value, minimum):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")


RUN_KEYS = {
    "name", "objective", "optimizer", "iterations", "seed", "log_params",
    "log_every", "start_point", "stop_loss", "batch_size",
}


def parse_run(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - RUN_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    for key in ("objective", "optimizer"):
        if key not in data:
            raise ConfigError(f"missing required key {key!r}")

    obj = _named_section(data["objective"], "objective")
    opt = _named_section(data["optimizer"], "optimizer")
    obj_name, opt_name = obj.pop("name"), opt.pop("name")

    preset = opt.pop("preset", None)
    hyper = {}
    if preset is not None:
        if opt_name != "dwmgrad":
            raise ConfigError("presets only apply to the dwmgrad optimizer")
        hyper.update(preset_hyperparams(preset))
    hyper.update(opt)
    allowed = set(hyperparameter_names(opt_name)) if opt_name in OPTIMIZERS else set()
    bad = set(hyper) - allowed
    if opt_name in OPTIMIZERS and bad:
        raise ConfigError(f"unknown hyperparameter(s) for {opt_name}: {sorted(bad)}")

    kwargs = {k: data[k] for k in RUN_KEYS - {"objective", "optimizer"} if k in data}
    if kwargs.get("stop_loss") is not None:
        kwargs["stop_loss"] = float(kwargs["stop_loss"])
    try:
        return ExperimentConfig(obj_name, opt_name, obj, hyper, **kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _named_section(section, what) -> dict:
    if isinstance(section, str):
        return {"name": section}
    if not isinstance(section, dict) or "name" not in section:
        raise ConfigError(f"{what} must be a name or an object with a 'name' key")
    return dict(section)


def emit_run(config: ExperimentConfig) -> str:
    return json.dumps(config.to_dict(), indent=2) + "\n"


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


# ---------------------------------------------------------------------------
# compare / sweep files
# ---------------------------------------------------------------------------


def parse_compare(data: dict) -> tuple[list[ExperimentConfig], Optional[float]]:
    """``{"base": {...}, "optimizers": [{...}, ...], "threshold": 1e-3}``.

    Each optimizer entry replaces the base config's optimizer section; it may
    also carry a ``label``.
    """
    _only(data, {"base", "optimizers", "threshold"}, "compare config")
    base = data.get("base")
    entries = data.get("optimizers")
    if not isinstance(base, dict) or not entries:
        raise ConfigError("compare config needs 'base' and a non-empty 'optimizers' list")
    configs = []
    for entry in entries:
        entry = _named_section(entry, "optimizer")
        label = entry.pop("label", None)
        cfg = parse_run({**base, "optimizer": entry})
        configs.append(cfg.replace(name=label or cfg.optimizer))
    threshold = data.get("threshold")
    return configs, None if threshold is None else float(threshold)


SWEEP_TOP_LEVEL = ("seed", "iterations")


def parse_sweep(data: dict) -> tuple[ExperimentConfig, dict]:
    """``{"base": {...}, "grid": {"alpha0": [...], ...}}``.

    Grid keys are hyperparameters of the base optimizer, or ``seed`` /
    ``iterations``.
    """
    _only(data, {"base", "grid"}, "sweep config")
    base = parse_run(data.get("base", {}))
    grid = data.get("grid")
    validate_grid(base, grid)
    return base, grid


def validate_grid(base: ExperimentConfig, grid) -> None:
    if not isinstance(grid, dict) or not grid:
        raise ConfigError("grid must be a non-empty object")
    allowed = set(hyperparameter_names(base.optimizer)) | set(SWEEP_TOP_LEVEL)
    for key, values in grid.items():
        if key not in allowed:
            raise ConfigError(f"grid key {key!r} is not a hyperparameter of {base.optimizer}")
        if not isinstance(values, list) or not values:
            raise ConfigError(f"grid values for {key!r} must be a non-empty list")


def _only(data, keys, what):
    if not isinstance(data, dict):
        raise ConfigError(f"{what} must be a JSON object")
    unknown = set(data) - keys
    if unknown:
        raise ConfigError(f"unknown {what} key(s): {sorted(unknown)}")
