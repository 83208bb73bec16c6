"""Deterministic expected dynamics of the multi-path system.

Tracks per-path expected agent counts and expected flows under the mean-field
update rule: the least-utilized path receives an expected in-migration of
``m * r * z * flow`` (where ``z`` extrapolates the flow on all other paths
from the local path state) plus the expected aggregate window growth, while
every other path loses an ``m`` share of agents and flow.  Paths above
capacity shrink multiplicatively instead of growing.

The expected per-agent window growth on a path depends on the distribution of
continuity times, which is determined by the path's rank in the utilization
order and the time since its last loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .model import (
    AlphaFunction,
    DegenerateParameterError,
    DegenerateStateError,
    NetworkConfig,
    ProtocolParams,
    alpha_eval,
    alpha_tail,
)


def extrapolation_factor_state(a_pi: float, n_agents: int) -> float:
    """Ratio of agents on all other paths to agents on this path."""
    if a_pi <= 0:
        raise DegenerateStateError(f"path has no agents (a_pi={a_pi})")
    return (n_agents - a_pi) / a_pi


def extrapolation_factor_eq(m: float, paths: int) -> float:
    """Extrapolation factor at the agent equilibrium:
    ``(1-(1-m)**(P-1)) / (m*(1-m)**(P-1))``.  Zero for a single path."""
    if paths == 1:
        return 0.0
    if m >= 1.0:
        raise DegenerateParameterError(f"undefined for m=1 with {paths} paths")
    w = (1.0 - m) ** (paths - 1)
    return (1.0 - w) / (m * w)


def _below_theta_count(p: int, theta: int, paths: int) -> int:
    """Number of support points ``tau = P*k + p`` strictly below ``theta``."""
    if theta <= p:
        return 0
    return -((p - theta) // paths)  # ceil((theta - p) / paths)


@dataclass(frozen=True)
class ContinuityDistribution:
    """Distribution of agent continuity times on one path, for a given rank
    ``p`` and time-since-loss ``theta``.

    Mass sits at ``tau = theta`` (agents that survived on the path since the
    last loss) and at ``tau = P*k + p < theta`` (agents that migrated in when
    the path last had the bottom rank, ``k`` rounds ago).
    """

    support: Dict[int, float]

    def mass(self, tau: int) -> float:
        return self.support.get(tau, 0.0)

    def total(self) -> float:
        return sum(self.support.values())


def continuity_distribution(p: int, theta: int, m: float, paths: int) -> ContinuityDistribution:
    """Continuity-time distribution for rank ``p`` and time-since-loss ``theta``."""
    if not 0 <= p < paths:
        raise ValueError(f"rank {p} out of range for {paths} paths")
    if theta < 0:
        raise ValueError(f"theta must be non-negative, got {theta}")
    g = (1.0 - m) ** (paths - 1)
    k_below = _below_theta_count(p, theta, paths)
    support: Dict[int, float] = {}
    for k in range(k_below):
        support[paths * k + p] = (1.0 - g) * g ** k
    survivor_mass = g ** k_below
    support[theta] = support.get(theta, 0.0) + survivor_mass
    return ContinuityDistribution(support)


def expected_alpha_theta(
    alpha: AlphaFunction, p: int, theta: int, m: float, paths: int
) -> float:
    """Expected additive increase per agent on a rank-``p`` path whose last
    loss was ``theta`` steps ago.

    The geometric part of the sum is folded into a closed form once ``alpha``
    reaches its constant tail, so the cost is independent of ``theta``.
    """
    if not 0 <= p < paths:
        raise ValueError(f"rank {p} out of range for {paths} paths")
    g = (1.0 - m) ** (paths - 1)
    k_below = _below_theta_count(p, theta, paths)
    tail_start, tail_value = alpha_tail(alpha)
    k_tail = max(0, -((p - tail_start) // paths))  # first k with P*k+p >= tail_start
    total = 0.0
    for k in range(min(k_below, k_tail)):
        total += (1.0 - g) * g ** k * alpha_eval(alpha, paths * k + p)
    if k_below > k_tail:
        total += tail_value * (g ** k_tail - g ** k_below)
    return total + g ** k_below * alpha_eval(alpha, theta)


def expected_alpha_limit(
    alpha: AlphaFunction, p: int, m: float, paths: int, tol: float = 1e-12
) -> float:
    """Limit of :func:`expected_alpha_theta` for ``theta -> inf``: the
    geometric-weighted series over arrival rounds.

    ``tol`` bounds the acceptable truncation error; since every supported
    ``alpha`` is eventually constant the remaining tail is summed exactly,
    so the result is accurate to float rounding for any ``tol``.
    """
    if not 0 <= p < paths:
        raise ValueError(f"rank {p} out of range for {paths} paths")
    del tol
    g = (1.0 - m) ** (paths - 1)
    tail_start, tail_value = alpha_tail(alpha)
    k_tail = max(0, -((p - tail_start) // paths))
    total = 0.0
    for k in range(k_tail):
        total += (1.0 - g) * g ** k * alpha_eval(alpha, paths * k + p)
    return total + tail_value * g ** k_tail


@dataclass(frozen=True)
class ExpectedState:
    """Per-path expected agent counts, expected flows, and time since the
    most recent loss, at one time step."""

    t: int
    agents: Tuple[float, ...]
    flows: Tuple[float, ...]
    theta: Tuple[int, ...]

    @property
    def paths(self) -> int:
        return len(self.agents)

    def ranks(self) -> Tuple[int, ...]:
        return rank_paths(self.flows)


def rank_paths(flows: Sequence[float]) -> Tuple[int, ...]:
    """Rank paths by descending flow (equal capacities make flow order equal
    utilization order).  Ties break toward the lower index taking the lower
    rank number, so the least-utilized path is the lowest index among the
    minimum -- the same tie rule the stochastic simulator uses for its
    migration target."""
    order = sorted(range(len(flows)), key=lambda i: (flows[i], i), reverse=True)
    ranks = [0] * len(flows)
    for position, path in enumerate(order):
        ranks[path] = position
    return tuple(ranks)


def initial_expected_state(
    net: NetworkConfig,
    agents: Optional[Sequence[float]] = None,
    flows: Optional[Sequence[float]] = None,
) -> ExpectedState:
    """Build a starting state: uniform agent split and zero flows unless
    overridden."""
    if agents is None:
        agents = [net.agents / net.paths] * net.paths
    agents = tuple(float(a) for a in agents)
    if len(agents) != net.paths:
        raise ValueError(f"expected {net.paths} per-path agent counts, got {len(agents)}")
    if abs(sum(agents) - net.agents) > 1e-6 * net.agents:
        raise ValueError(f"per-path agents sum to {sum(agents)}, expected {net.agents}")
    if flows is None:
        flows = [0.0] * net.paths
    flows = tuple(float(f) for f in flows)
    if len(flows) != net.paths:
        raise ValueError(f"expected {net.paths} per-path flows, got {len(flows)}")
    return ExpectedState(t=0, agents=agents, flows=flows, theta=(0,) * net.paths)


def step_expected(
    state: ExpectedState,
    net: NetworkConfig,
    proto: ProtocolParams,
    *,
    enforce_capacity: bool = True,
) -> ExpectedState:
    """Advance the expected dynamics by one synchronous step.

    With ``enforce_capacity=False`` the loss branches never trigger, which
    isolates the capacity-free dynamics the equilibrium solver describes.
    """
    n, paths = net.agents, net.paths
    cap = net.capacity_per_path if enforce_capacity else math.inf
    m, r, beta = proto.m, proto.r, proto.beta
    ranks = rank_paths(state.flows)
    pi_min = ranks.index(paths - 1)
    total_flow = sum(state.flows)
    new_agents: List[float] = []
    new_flows: List[float] = []
    new_theta: List[int] = []
    for i in range(paths):
        a, f, th = state.agents[i], state.flows[i], state.theta[i]
        lossy = f > cap
        if i == pi_min:
            # In-migration: extrapolate other-path flow from the local state,
            # or use the exact other-path sum if this path is empty.
            if a > 0:
                inflow = m * r * extrapolation_factor_state(a, n) * f
            else:
                inflow = m * r * (total_flow - f)
            if lossy:
                new_flows.append(beta * f + inflow)
            else:
                growth = expected_alpha_theta(proto.alpha, ranks[i], th, m, paths) * a
                new_flows.append(f + inflow + growth)
            new_agents.append((1.0 - m) * a + m * n)
        else:
            if lossy:
                new_flows.append(beta * (1.0 - m) * f)
            else:
                growth = expected_alpha_theta(proto.alpha, ranks[i], th, m, paths) * a
                new_flows.append((1.0 - m) * (f + growth))
            new_agents.append((1.0 - m) * a)
        new_theta.append(0 if lossy else th + 1)
    return ExpectedState(
        t=state.t + 1,
        agents=tuple(new_agents),
        flows=tuple(new_flows),
        theta=tuple(new_theta),
    )


def run_expected(
    net: NetworkConfig,
    proto: ProtocolParams,
    horizon: int,
    initial: ExpectedState,
    *,
    enforce_capacity: bool = True,
) -> List[ExpectedState]:
    """Iterate :func:`step_expected` for ``horizon`` steps; returns the full
    sequence including the initial state."""
    if horizon < 0:
        raise ValueError(f"horizon must be non-negative, got {horizon}")
    states = [initial]
    for _ in range(horizon):
        states.append(step_expected(states[-1], net, proto, enforce_capacity=enforce_capacity))
    return states
