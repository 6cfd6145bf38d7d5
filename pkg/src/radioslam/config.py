"""Scenario configuration: YAML files mapped onto frozen dataclasses.

A scenario file is a YAML mapping with the sections below; every key is
optional except ``environment`` and ``trajectory``. Unknown keys are
rejected and every value is checked on load.

.. code-block:: yaml

    environment:
      pa_positions: [[2.0, 6.0], [8.0, 5.5]]
      surfaces:
        - {a: [0, 0], b: [0, 8], reflection_amplitude: 0.7}
    trajectory:
      waypoints: [[3, 2], [6, 2]]
      num_steps: 100          # or spacing: 0.05, or positions: [...]
    signal: {f_c: 6.0e9, bandwidth: 3.0e8, delta: 1.0e7}
    amplitude: {normalize_at_1m: true, phase_per_step: true}
    noise_variance: 6.30957e-05
    model: {sigma_x2: 1.0e-4, p_b: 1.0e-4}   # any ModelConfig field
    prior: {agent_radius: 0.5}                # any PriorConfig field
    particles: {agent: 10000, noise: 1000}
    evaluation: {gospa_cutoff: 2.0, gospa_order: 1.0, include_pa: true}
    n_runs: 1
    base_seed: 0
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import re
import typing
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import yaml

from .engine import PriorConfig
from .models import ModelConfig
from .signal import SignalSpec

Point = Tuple[float, float]


class ConfigError(ValueError):
    """Invalid scenario file; the message names the line or the field."""


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e9`` and ``6.0e9`` as floats (YAML 1.2 style)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
    |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
    |\.[0-9_]+(?:[eE][-+][0-9]+)?
    |[-+]?\.(?:inf|Inf|INF)
    |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."),
)


@dataclass(frozen=True)
class SurfaceConfig:
    a: Point
    b: Point
    reflection_amplitude: float = 0.7


@dataclass(frozen=True)
class EnvironmentConfig:
    pa_positions: Tuple[Point, ...]
    surfaces: Tuple[SurfaceConfig, ...] = ()


@dataclass(frozen=True)
class TrajectoryConfig:
    """Give ``positions`` directly, or ``waypoints`` with ``spacing`` or ``num_steps``."""

    waypoints: Optional[Tuple[Point, ...]] = None
    spacing: Optional[float] = None
    num_steps: Optional[int] = None
    positions: Optional[Tuple[Point, ...]] = None

    def __post_init__(self):
        if self.positions is not None:
            if self.waypoints is not None or self.spacing is not None or self.num_steps is not None:
                raise ValueError("positions excludes waypoints, spacing and num_steps")
            if len(self.positions) < 1:
                raise ValueError("positions must not be empty")
            return
        if self.waypoints is None or len(self.waypoints) < 2:
            raise ValueError("need positions or at least two waypoints")
        if (self.spacing is None) == (self.num_steps is None):
            raise ValueError("give exactly one of spacing and num_steps")
        if self.spacing is not None and not self.spacing > 0:
            raise ValueError("spacing must be > 0")
        if self.num_steps is not None and self.num_steps < 2:
            raise ValueError("num_steps must be >= 2")


@dataclass(frozen=True)
class SignalConfig:
    f_c: float = 6.0e9
    bandwidth: float = 300.0e6
    delta: float = 10.0e6

    def __post_init__(self):
        SignalSpec(self.f_c, self.bandwidth, self.delta)  # validates the grid

    def spec(self) -> SignalSpec:
        return SignalSpec(self.f_c, self.bandwidth, self.delta)


@dataclass(frozen=True)
class AmplitudeConfig:
    normalize_at_1m: bool = True
    phase_per_step: bool = True


@dataclass(frozen=True)
class ParticleConfig:
    agent: int = 10_000
    noise: int = 1_000

    def __post_init__(self):
        if self.agent < 1 or self.noise < 1:
            raise ValueError("particle counts must be >= 1")


@dataclass(frozen=True)
class EvaluationConfig:
    gospa_cutoff: float = 2.0
    gospa_order: float = 1.0
    include_pa: bool = True
    exclude_lost_runs: bool = True

    def __post_init__(self):
        if not self.gospa_cutoff > 0:
            raise ValueError("gospa_cutoff must be > 0")
        if not self.gospa_order >= 1:
            raise ValueError("gospa_order must be >= 1")


@dataclass(frozen=True)
class ScenarioConfig:
    environment: EnvironmentConfig
    trajectory: TrajectoryConfig
    name: str = "scenario"
    signal: SignalConfig = field(default_factory=SignalConfig)
    amplitude: AmplitudeConfig = field(default_factory=AmplitudeConfig)
    noise_variance: float = 10 ** -4.2
    model: ModelConfig = field(default_factory=ModelConfig)
    prior: PriorConfig = field(default_factory=PriorConfig)
    particles: ParticleConfig = field(default_factory=ParticleConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    n_runs: int = 1
    base_seed: int = 0

    def __post_init__(self):
        if not self.noise_variance >= 0:
            raise ValueError("noise_variance must be >= 0")
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        if self.base_seed < 0:
            raise ValueError("base_seed must be >= 0")


# ---------------------------------------------------------------------------
# dict <-> dataclass


def _convert(tp, value, path: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin is typing.Union:  # Optional[X]
        if value is None:
            return None
        inner = [a for a in args if a is not type(None)]
        return _convert(inner[0], value, path)
    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list, got {type(value).__name__}")
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_convert(args[0], v, f"{path}[{i}]") for i, v in enumerate(value))
        if len(value) != len(args):
            raise ConfigError(f"{path}: expected {len(args)} entries, got {len(value)}")
        return tuple(_convert(a, v, f"{path}[{i}]") for i, (a, v) in enumerate(zip(args, value)))
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true or false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    raise TypeError(f"unsupported config type {tp}")


def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected a mapping, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{path or 'config'}: unknown key(s) {', '.join(map(str, unknown))}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        sub = f"{path}.{f.name}" if path else f.name
        if f.name in data:
            kwargs[f.name] = _convert(hints[f.name], data[f.name], sub)
        elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
            raise ConfigError(f"{sub}: required key is missing")
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


def config_from_dict(data) -> ScenarioConfig:
    return _build(ScenarioConfig, data, "")


def config_to_dict(cfg: ScenarioConfig) -> dict:
    def plain(x):
        if isinstance(x, tuple):
            return [plain(v) for v in x]
        if isinstance(x, dict):
            return {k: plain(v) for k, v in x.items()}
        return x

    return plain(dataclasses.asdict(cfg))


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError(f"{source}: YAML parse error at {where}: {exc.problem}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: YAML parse error: {exc}") from exc
    if data is None:
        raise ConfigError(f"{source}: empty config")
    return config_from_dict(data)


def load_config(path) -> ScenarioConfig:
    """Read and validate a scenario file, filling every default."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, str(path))


def dump_config(cfg: ScenarioConfig) -> str:
    """YAML text of the fully expanded config; loading it gives ``cfg`` back."""
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, default_flow_style=None)


def config_hash(cfg: ScenarioConfig) -> str:
    blob = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def with_overrides(cfg: ScenarioConfig, n_runs: Optional[int] = None, base_seed: Optional[int] = None,
                   particles: Optional[int] = None, noise_particles: Optional[int] = None) -> ScenarioConfig:
    """Copy of ``cfg`` with command-line overrides applied."""
    changes = {}
    if n_runs is not None:
        changes["n_runs"] = n_runs
    if base_seed is not None:
        changes["base_seed"] = base_seed
    if particles is not None or noise_particles is not None:
        changes["particles"] = ParticleConfig(
            particles if particles is not None else cfg.particles.agent,
            noise_particles if noise_particles is not None else cfg.particles.noise,
        )
    try:
        return dataclasses.replace(cfg, **changes)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


__all__: List[str] = [
    "AmplitudeConfig", "ConfigError", "EnvironmentConfig", "EvaluationConfig", "ParticleConfig",
    "ScenarioConfig", "SignalConfig", "SurfaceConfig", "TrajectoryConfig", "config_from_dict",
    "config_hash", "config_to_dict", "dump_config", "load_config", "parse_config", "with_overrides",
]
