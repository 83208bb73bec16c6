"""Experiment config files (TOML) and command-line overrides.

One document describes one experiment: the network, the protocol, run
settings, and optional sweep/consistency-map sections.  Unknown sections or
keys are hard errors so typos fail loudly instead of silently falling back
to defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import tomli

from .model import (
    ConstantAlpha,
    NetworkConfig,
    ProtocolParams,
    Seed,
    SlowStartAlpha,
    TableAlpha,
    validate,
)


class ConfigError(ValueError):
    """Malformed experiment config; the message names the offending key."""


@dataclass(frozen=True)
class RunSettings:
    horizon: int = 100
    seed: Seed = Seed(0)
    trials: int = 1
    assignment: Union[str, List[int]] = "round_robin"
    counts: Optional[List[int]] = None  # per-path agent counts; overrides assignment
    transient: int = 20  # steps dropped before overlay/statistics comparisons


@dataclass(frozen=True)
class GridSpec:
    start: float
    stop: float
    step: float

    def values(self) -> List[float]:
        count = int(round((self.stop - self.start) / self.step)) + 1
        vals = [round(self.start + k * self.step, 10) for k in range(count)]
        return [v for v in vals if v <= self.stop + 1e-12]


@dataclass(frozen=True)
class SweepSettings:
    m_grid: List[float]
    r_grid: List[float]
    with_fairness: bool = False
    fairness_samples: int = 10_000
    fairness_horizon: int = 500
    p_loss: float = 0.0


@dataclass(frozen=True)
class ConsistencySettings:
    paths: List[int] = field(default_factory=lambda: [2, 5])
    alphas: List[str] = field(default_factory=lambda: ["constant", "slow_start"])
    m_points: int = 99
    r_points: int = 100


@dataclass(frozen=True)
class FairnessSettings:
    p_loss_values: List[float] = field(default_factory=lambda: [0.0])
    samples: int = 10_000
    horizon: int = 500


@dataclass(frozen=True)
class ExperimentConfig:
    network: Optional[NetworkConfig]
    protocol: Optional[ProtocolParams]
    run: RunSettings
    sweep: Optional[SweepSettings]
    consistency: Optional[ConsistencySettings]
    fairness: Optional[FairnessSettings] = None

    def require_network(self) -> NetworkConfig:
        if self.network is None:
            raise ConfigError("missing [network] section")
        return self.network

    def require_protocol(self) -> ProtocolParams:
        if self.protocol is None:
            raise ConfigError("missing [protocol] section")
        return self.protocol


_ALPHA_FIELDS = {
    "constant": {"value"},
    "slow_start": {"threshold", "base_after"},
    "table": {"values", "tail"},
}


def _take(section: Dict[str, Any], section_name: str, known: Sequence[str]) -> Dict[str, Any]:
    unknown = set(section) - set(known)
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key '{section_name}.{key}'")
    return section


def _number(section: Dict[str, Any], section_name: str, key: str, default=None):
    if key not in section:
        if default is None:
            raise ConfigError(f"missing key '{section_name}.{key}'")
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"key '{section_name}.{key}' must be a number, got {value!r}")
    return value


def _parse_alpha(raw: Dict[str, Any]):
    kind = raw.get("kind")
    if kind not in _ALPHA_FIELDS:
        raise ConfigError(
            f"key 'protocol.alpha.kind' must be one of {sorted(_ALPHA_FIELDS)}, got {kind!r}"
        )
    # fields of the other variants stay known (a --set override may switch
    # the kind and leave them behind); anything else is a typo
    all_fields = {f for fields in _ALPHA_FIELDS.values() for f in fields}
    _take(raw, "protocol.alpha", ["kind", *all_fields])
    raw = {k: v for k, v in raw.items() if k == "kind" or k in _ALPHA_FIELDS[kind]}
    if kind == "constant":
        return ConstantAlpha(value=float(_number(raw, "protocol.alpha", "value", 1.0)))
    if kind == "slow_start":
        threshold = _number(raw, "protocol.alpha", "threshold", 5)
        if not isinstance(threshold, int):
            raise ConfigError("key 'protocol.alpha.threshold' must be an integer")
        return SlowStartAlpha(
            threshold=threshold,
            base_after=float(_number(raw, "protocol.alpha", "base_after", 1.0)),
        )
    values = raw.get("values")
    if not isinstance(values, list) or not all(isinstance(v, (int, float)) for v in values):
        raise ConfigError("key 'protocol.alpha.values' must be a list of numbers")
    return TableAlpha(values=tuple(float(v) for v in values),
                      tail=float(_number(raw, "protocol.alpha", "tail", 1.0)))


def _parse_grid(section: Dict[str, Any], name: str) -> List[float]:
    raw = section.get(name)
    if isinstance(raw, list):
        if not all(isinstance(v, (int, float)) for v in raw):
            raise ConfigError(f"key 'sweep.{name}' must be a list of numbers")
        return [float(v) for v in raw]
    if isinstance(raw, dict):
        _take(raw, f"sweep.{name}", ["start", "stop", "step"])
        return GridSpec(
            start=float(_number(raw, f"sweep.{name}", "start")),
            stop=float(_number(raw, f"sweep.{name}", "stop")),
            step=float(_number(raw, f"sweep.{name}", "step")),
        ).values()
    raise ConfigError(f"key 'sweep.{name}' must be a list or a start/stop/step table")


def parse_config_data(data: Dict[str, Any]) -> ExperimentConfig:
    _take(data, "", ["network", "protocol", "run", "sweep", "consistency", "fairness"])

    network = None
    if "network" in data:
        sec = _take(data["network"], "network", ["paths", "capacity_total", "agents"])
        paths = _number(sec, "network", "paths")
        agents = _number(sec, "network", "agents")
        if not isinstance(paths, int) or not isinstance(agents, int):
            raise ConfigError("keys 'network.paths' and 'network.agents' must be integers")
        network = NetworkConfig(
            paths=paths,
            capacity_total=float(_number(sec, "network", "capacity_total")),
            agents=agents,
        )

    protocol = None
    if "protocol" in data:
        sec = _take(data["protocol"], "protocol", ["beta", "m", "r", "alpha"])
        alpha_raw = sec.get("alpha")
        if not isinstance(alpha_raw, dict):
            raise ConfigError("missing section [protocol.alpha]")
        protocol = ProtocolParams(
            alpha=_parse_alpha(dict(alpha_raw)),
            beta=float(_number(sec, "protocol", "beta")),
            m=float(_number(sec, "protocol", "m")),
            r=float(_number(sec, "protocol", "r")),
        )

    run = RunSettings()
    if "run" in data:
        sec = _take(
            data["run"], "run", ["horizon", "seed", "trials", "assignment", "counts", "transient"]
        )
        horizon = _number(sec, "run", "horizon", run.horizon)
        trials = _number(sec, "run", "trials", run.trials)
        transient = _number(sec, "run", "transient", run.transient)
        seed_raw = _number(sec, "run", "seed", 0)
        if not all(isinstance(v, int) for v in (horizon, trials, transient, seed_raw)):
            raise ConfigError("keys in [run] must be integers")
        assignment = sec.get("assignment", run.assignment)
        if not (isinstance(assignment, str) or isinstance(assignment, list)):
            raise ConfigError("key 'run.assignment' must be a string or a list")
        counts = sec.get("counts")
        if counts is not None and (
            not isinstance(counts, list) or not all(isinstance(c, int) for c in counts)
        ):
            raise ConfigError("key 'run.counts' must be a list of integers")
        run = RunSettings(
            horizon=horizon,
            seed=Seed(seed_raw),
            trials=trials,
            assignment=assignment,
            counts=counts,
            transient=transient,
        )

    sweep_settings = None
    if "sweep" in data:
        sec = _take(
            data["sweep"],
            "sweep",
            ["m_grid", "r_grid", "with_fairness", "fairness_samples", "fairness_horizon", "p_loss"],
        )
        if "m_grid" not in sec or "r_grid" not in sec:
            raise ConfigError("section [sweep] requires 'm_grid' and 'r_grid'")
        with_fairness = sec.get("with_fairness", False)
        if not isinstance(with_fairness, bool):
            raise ConfigError("key 'sweep.with_fairness' must be a boolean")
        sweep_settings = SweepSettings(
            m_grid=_parse_grid(sec, "m_grid"),
            r_grid=_parse_grid(sec, "r_grid"),
            with_fairness=with_fairness,
            fairness_samples=int(_number(sec, "sweep", "fairness_samples", 10_000)),
            fairness_horizon=int(_number(sec, "sweep", "fairness_horizon", 500)),
            p_loss=float(_number(sec, "sweep", "p_loss", 0.0)),
        )

    consistency = None
    if "consistency" in data:
        sec = _take(data["consistency"], "consistency", ["paths", "alphas", "m_points", "r_points"])
        defaults = ConsistencySettings()
        paths = sec.get("paths", defaults.paths)
        alphas = sec.get("alphas", defaults.alphas)
        if not isinstance(paths, list) or not all(isinstance(p, int) for p in paths):
            raise ConfigError("key 'consistency.paths' must be a list of integers")
        if not isinstance(alphas, list) or not all(a in ("constant", "slow_start") for a in alphas):
            raise ConfigError("key 'consistency.alphas' must list 'constant'/'slow_start'")
        consistency = ConsistencySettings(
            paths=paths,
            alphas=alphas,
            m_points=int(_number(sec, "consistency", "m_points", defaults.m_points)),
            r_points=int(_number(sec, "consistency", "r_points", defaults.r_points)),
        )

    fairness = None
    if "fairness" in data:
        sec = _take(data["fairness"], "fairness", ["p_loss_values", "samples", "horizon"])
        defaults = FairnessSettings()
        p_loss_values = sec.get("p_loss_values", defaults.p_loss_values)
        if not isinstance(p_loss_values, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in p_loss_values
        ):
            raise ConfigError("key 'fairness.p_loss_values' must be a list of numbers")
        fairness = FairnessSettings(
            p_loss_values=[float(v) for v in p_loss_values],
            samples=int(_number(sec, "fairness", "samples", defaults.samples)),
            horizon=int(_number(sec, "fairness", "horizon", defaults.horizon)),
        )

    if network is not None and protocol is not None:
        try:
            validate(network, protocol)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if network is not None and run.counts is not None:
        if len(run.counts) != network.paths:
            raise ConfigError("key 'run.counts' must list one count per path")
        if sum(run.counts) != network.agents:
            raise ConfigError("key 'run.counts' must sum to network.agents")
    return ExperimentConfig(
        network=network,
        protocol=protocol,
        run=run,
        sweep=sweep_settings,
        consistency=consistency,
        fairness=fairness,
    )


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc
    return parse_config_data(data)


def _coerce(text: str) -> Any:
    lowered = text.strip()
    if lowered in ("true", "false"):
        return lowered == "true"
    if lowered.startswith("[") and lowered.endswith("]"):
        inner = lowered[1:-1].strip()
        return [] if not inner else [_coerce(part) for part in inner.split(",")]
    try:
        return int(lowered)
    except ValueError:
        pass
    try:
        return float(lowered)
    except ValueError:
        pass
    return lowered.strip("\"'")


def apply_overrides(data: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Apply ``key.path=value`` overrides to raw config data (last one wins)."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        dotted, raw_value = item.split("=", 1)
        keys = dotted.strip().split(".")
        if not all(keys):
            raise ConfigError(f"override {item!r} has an empty key component")
        node = data
        for key in keys[:-1]:
            node = node.setdefault(key, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r} traverses non-table key '{key}'")
        node[keys[-1]] = _coerce(raw_value)
    return data


def load_config_with_overrides(path: Union[str, Path], overrides: Sequence[str]) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc
    return parse_config_data(apply_overrides(data, overrides))
