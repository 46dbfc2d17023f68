"""Experiment configuration: one JSON document covering substrate, request
generator, simulation and optional sweep."""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

from pydantic import ConfigDict, TypeAdapter, ValidationError

from .exact import ExactConfig
from .p2c import P2cConfig
from .resource import LinkSpec, PsnConfig, TierSpec
from .sim import SimConfig
from .slices import NsprParams

SWEEP_PARAMETERS = ("arrival_rate", "capacity_scale", "chain_len", "requirements")


class ConfigError(ValueError):
    pass


@dataclass
class SweepSpec:
    parameter: str
    values: list[Any]
    seeds: list[int] = field(default_factory=lambda: [1, 2, 3, 4, 5])


@dataclass
class ExperimentConfig:
    psn: PsnConfig = field(default_factory=PsnConfig)
    nspr: NsprParams = field(default_factory=NsprParams)
    arrival_rate: float = 1.0
    horizon: float = 100.0  # time units
    sim: SimConfig = field(default_factory=SimConfig)
    trace_seed: int = 0
    output_dir: str = "out"
    sweep: Optional[SweepSpec] = None

    def validate(self):
        try:
            self.psn.validate()
            self.nspr.validate()
            self.sim.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.arrival_rate < 0:
            raise ConfigError("arrival_rate: must be >= 0")
        if not self.horizon > 0:
            raise ConfigError("horizon: must be > 0")
        if self.sweep is not None:
            if self.sweep.parameter not in SWEEP_PARAMETERS:
                raise ConfigError(f"sweep.parameter: must be one of {', '.join(SWEEP_PARAMETERS)}")
            if not self.sweep.values:
                raise ConfigError("sweep.values: must be non-empty")
            if not self.sweep.seeds or len(set(self.sweep.seeds)) != len(self.sweep.seeds):
                raise ConfigError("sweep.seeds: must be non-empty and distinct")

    def to_dict(self) -> dict:
        return asdict(self)


for _cls in (ExperimentConfig, SweepSpec, PsnConfig, TierSpec, LinkSpec, NsprParams, SimConfig,
             ExactConfig, P2cConfig):
    _cls.__pydantic_config__ = ConfigDict(extra="forbid")

_adapter = TypeAdapter(ExperimentConfig)


def config_from_dict(data: dict) -> ExperimentConfig:
    try:
        cfg = _adapter.validate_python(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        where = ".".join(str(p) for p in err["loc"]) or "<root>"
        raise ConfigError(f"{where}: {err['msg']}") from exc
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return config_from_dict(data)


def apply_sweep_value(cfg: ExperimentConfig, parameter: str, value) -> ExperimentConfig:
    """Copy of ``cfg`` with one sweep point applied."""
    out = copy.deepcopy(cfg)
    out.sweep = None
    if parameter == "arrival_rate":
        out.arrival_rate = float(value)
    elif parameter == "capacity_scale":
        out.psn = cfg.psn.scaled(float(value))
    elif parameter == "chain_len":
        out.nspr.chain_len = (int(value), int(value))
    elif parameter == "requirements":
        for key in ("cpu", "ram", "e2e_latency"):
            if key in value:
                setattr(out.nspr, key, tuple(value[key]))
    else:
        raise ConfigError(f"unknown sweep parameter {parameter!r}")
    out.validate()
    return out
