"""Shared domain types for multi-path congestion-control experiments.

A network is a set of parallel, equal-capacity paths shared by a fixed
population of agents.  A protocol combines a loss-based congestion-control
rule (additive increase ``alpha``, multiplicative decrease ``beta``) with a
path-selection behavior (migration probability ``m``, window reset softness
``r`` applied on a path switch).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

DEFAULT_TAU_CAP = 10_000

# 2**tau overflows float64 near 1024; beyond that the value is +inf anyway.
_POW2_LIMIT = 1024


class InvalidParameterError(ValueError):
    """A network or protocol parameter violates its domain constraint."""

    def __init__(self, name: str, value, constraint: str):
        self.name = name
        self.value = value
        self.constraint = constraint
        super().__init__(f"{name}={value!r} violates: {constraint}")


class InvalidAssignmentError(ValueError):
    """An explicit agent-to-path assignment is malformed."""


class DegenerateParameterError(ValueError):
    """A closed-form expression is undefined for these parameters."""


class DegenerateStateError(ValueError):
    """A state-dependent quantity is undefined (e.g. no agents on a path)."""


@dataclass(frozen=True)
class NetworkConfig:
    """Static network: ``paths`` parallel paths sharing ``capacity_total``
    (MSS per RTT) equally, used by ``agents`` end hosts."""

    paths: int
    capacity_total: float
    agents: int

    @property
    def capacity_per_path(self) -> float:
        return self.capacity_total / self.paths


@dataclass(frozen=True)
class ConstantAlpha:
    """Additive increase that ignores the continuity time."""

    value: float = 1.0

    kind = "constant"


@dataclass(frozen=True)
class SlowStartAlpha:
    """Exponential ramp-up: ``2**tau`` below ``threshold``, then a flat
    ``base_after`` increase (TCP slow-start style)."""

    threshold: int = 5
    base_after: float = 1.0

    kind = "slow_start"


@dataclass(frozen=True)
class TableAlpha:
    """Explicit lookup table over continuity time, constant ``tail`` beyond."""

    values: Tuple[float, ...]
    tail: float = 1.0

    kind = "table"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))


AlphaFunction = Union[ConstantAlpha, SlowStartAlpha, TableAlpha]


def alpha_eval(f: AlphaFunction, tau: int) -> float:
    """Evaluate the additive-increase function at continuity time ``tau``."""
    if tau < 0:
        raise ValueError(f"continuity time must be non-negative, got {tau}")
    if isinstance(f, ConstantAlpha):
        return f.value
    if isinstance(f, SlowStartAlpha):
        if tau < f.threshold:
            return 2.0 ** tau if tau < _POW2_LIMIT else math.inf
        return f.base_after
    if isinstance(f, TableAlpha):
        return f.values[tau] if tau < len(f.values) else f.tail
    raise TypeError(f"not an additive-increase function: {f!r}")


def alpha_eval_array(f: AlphaFunction, taus: np.ndarray) -> np.ndarray:
    """Vectorized :func:`alpha_eval` over an integer array of continuity times."""
    taus = np.asarray(taus)
    if isinstance(f, ConstantAlpha):
        return np.full(taus.shape, f.value)
    if isinstance(f, SlowStartAlpha):
        capped = np.minimum(taus, min(f.threshold, _POW2_LIMIT))
        return np.where(taus < f.threshold, 2.0 ** capped.astype(np.float64), f.base_after)
    if isinstance(f, TableAlpha):
        table = np.append(np.asarray(f.values, dtype=np.float64), f.tail)
        return table[np.minimum(taus, len(f.values))]
    raise TypeError(f"not an additive-increase function: {f!r}")


def alpha_tail(f: AlphaFunction) -> Tuple[int, float]:
    """Return ``(tail_start, tail_value)``: the point beyond which the
    additive increase is constant.  All supported variants are eventually
    constant, which lets series over ``alpha`` be summed in closed form."""
    if isinstance(f, ConstantAlpha):
        return 0, f.value
    if isinstance(f, SlowStartAlpha):
        return f.threshold, f.base_after
    if isinstance(f, TableAlpha):
        return len(f.values), f.tail
    raise TypeError(f"not an additive-increase function: {f!r}")


def alpha_max(f: AlphaFunction, tau_cap: int = DEFAULT_TAU_CAP) -> float:
    """Maximum additive increase over continuity times ``0..tau_cap``.

    Constant and slow-start variants have exact closed-form maxima that do
    not depend on ``tau_cap``.
    """
    if tau_cap < 1:
        raise ValueError(f"tau_cap must be >= 1, got {tau_cap}")
    if isinstance(f, ConstantAlpha):
        return f.value
    if isinstance(f, SlowStartAlpha):
        if f.threshold == 0:
            return f.base_after
        peak = 2.0 ** (f.threshold - 1) if f.threshold - 1 < _POW2_LIMIT else math.inf
        return max(peak, f.base_after)
    if isinstance(f, TableAlpha):
        head = f.values[: tau_cap + 1]
        if tau_cap >= len(f.values):
            return max(max(head, default=f.tail), f.tail)
        return max(head)
    raise TypeError(f"not an additive-increase function: {f!r}")


@dataclass(frozen=True)
class ProtocolParams:
    """One multi-path congestion-control protocol: CC rule plus path-selection
    behavior.  ``m`` is the per-step probability that an agent not on the
    least-utilized path switches to it; ``r`` scales the congestion window on
    a switch (0 = full reset, 1 = keep the window)."""

    alpha: AlphaFunction
    beta: float
    m: float
    r: float


@dataclass(frozen=True)
class Seed:
    """Reproducible RNG key.  Identical ``(base, stream)`` pairs yield
    identical random sequences; derived streams stay independent."""

    base: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(entropy=self.base, spawn_key=(self.stream,))
        )

    def trial(self, index: int) -> "Seed":
        """Seed for trial ``index`` of an ensemble: stream = trial index."""
        return Seed(self.base, index)

    def child(self, *path: int) -> "Seed":
        """Derive an independent seed keyed by this seed plus ``path``
        (used for per-grid-point streams in sweeps)."""
        ss = np.random.SeedSequence(entropy=self.base, spawn_key=(self.stream, *path))
        base, stream = (int(x) for x in ss.generate_state(2, np.uint64))
        return Seed(base, stream)


def _check(condition: bool, name: str, value, constraint: str) -> None:
    if not condition:
        raise InvalidParameterError(name, value, constraint)


def validate(net: NetworkConfig, proto: ProtocolParams) -> Tuple[NetworkConfig, ProtocolParams]:
    """Check all type invariants; return the pair unchanged if they hold.

    Raises :class:`InvalidParameterError` naming the first violated
    constraint.  Idempotent: validating a validated pair is a no-op.
    """
    _check(isinstance(net.paths, int) and net.paths >= 1, "paths", net.paths, "integer >= 1")
    _check(isinstance(net.agents, int) and net.agents >= 1, "agents", net.agents, "integer >= 1")
    _check(
        isinstance(net.capacity_total, (int, float))
        and net.capacity_total > 0
        and math.isfinite(net.capacity_total),
        "capacity_total",
        net.capacity_total,
        "finite real > 0",
    )
    _check(0.0 <= proto.beta <= 1.0, "beta", proto.beta, "in [0, 1]")
    _check(0.0 < proto.m <= 1.0, "m", proto.m, "in (0, 1]")
    _check(0.0 <= proto.r <= 1.0, "r", proto.r, "in [0, 1]")
    a = proto.alpha
    if isinstance(a, ConstantAlpha):
        _check(a.value > 0, "alpha.value", a.value, "real > 0")
    elif isinstance(a, SlowStartAlpha):
        _check(isinstance(a.threshold, int) and a.threshold >= 0,
               "alpha.threshold", a.threshold, "integer >= 0")
        _check(a.base_after > 0, "alpha.base_after", a.base_after, "real > 0")
    elif isinstance(a, TableAlpha):
        _check(all(v >= 0 for v in a.values), "alpha.values", a.values, "all >= 0")
        _check(a.tail > 0, "alpha.tail", a.tail, "real > 0")
    else:
        raise InvalidParameterError("alpha", a, "one of constant/slow_start/table")
    return net, proto
