"""Closed-form dynamic equilibria of the expected multi-path dynamics.

Under round-robin rank rotation (each step every path rises one rank and the
bottom path jumps to the top), the expected agent counts and flows settle
into a P-state cycle.  This module computes those cycle levels exactly,
classifies the equilibrium (lossless, lossy, divergent for r=1, or logically
inconsistent with the rotation pattern), and bounds the flow excursions of
lossy equilibria.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .expected import expected_alpha_limit, extrapolation_factor_eq
from .model import DegenerateParameterError, NetworkConfig, ProtocolParams


class Classification(enum.Enum):
    LOSSLESS = "lossless"
    LOSSY = "lossy"
    DIVERGENT_R1 = "divergent_r1"
    INCONSISTENT_WITH_P_STEP = "inconsistent"
    NON_CONVERGENT = "non_convergent"


class NotLossyError(ValueError):
    """Lossy-equilibrium bounds requested for a lossless equilibrium."""


class UnsupportedRankError(ValueError):
    """The r=1 trajectory is linear and known for rank 0 only."""


class UnrateableError(ValueError):
    """No rating is defined for this equilibrium classification."""


@dataclass(frozen=True)
class AgentEquilibrium:
    """Cycle levels of the expected agent counts: the rank-p path holds
    ``levels[p]`` agents, strictly decreasing in p for m < 1."""

    levels: Tuple[float, ...]


@dataclass(frozen=True)
class FlowEquilibrium:
    """Cycle levels of the expected flows plus their classification.

    ``levels`` is None when no fixed point exists (r=1, or a non-contracting
    geometric factor).  ``q = 1 + m*r*z(m, P)`` is the one-step gain of the
    bottom-rank path; ``q*(1-m)**(P-1)`` is the per-round contraction factor.
    """

    levels: Optional[Tuple[float, ...]]
    q: float
    classification: Classification


@dataclass(frozen=True)
class LossyBounds:
    """Bounds on the flow excursions of a lossy equilibrium: ``upper`` bounds
    the peak; the two lower bounds cover rotation-preserving (type 1) and
    rotation-breaking (type 2) loss patterns."""

    upper: float
    lower_type1: float
    lower_type2: float


def agent_equilibrium(m: float, n_agents: int, paths: int) -> AgentEquilibrium:
    """Cycle levels ``(1-m)**p * m * N / (1 - (1-m)**P)`` for each rank p."""
    if not 0.0 < m <= 1.0:
        raise DegenerateParameterError(f"m must be in (0, 1], got {m}")
    base = m * n_agents / (1.0 - (1.0 - m) ** paths)
    return AgentEquilibrium(tuple((1.0 - m) ** p * base for p in range(paths)))


def agent_trajectory(
    a_start: float, p: int, m: float, n_agents: int, paths: int, t_offset: int
) -> float:
    """Expected agent count on a rank-p path ``t_offset`` steps after it held
    ``a_start`` agents at a rank-p moment: exponential approach to the cycle
    level with per-step factor ``1-m``."""
    if t_offset < 0:
        raise ValueError(f"t_offset must be non-negative, got {t_offset}")
    level = agent_equilibrium(m, n_agents, paths).levels[p]
    return (a_start - level) * (1.0 - m) ** t_offset + level


def _alpha_hats(net: NetworkConfig, proto: ProtocolParams) -> List[float]:
    return [
        expected_alpha_limit(proto.alpha, p, proto.m, net.paths)
        for p in range(net.paths)
    ]


def hypothetical_flow_levels(net: NetworkConfig, proto: ProtocolParams) -> Tuple[float, ...]:
    """Capacity-free flow cycle levels for every rank.

    The rank-p level accumulates the growth contributed on each step of one
    rotation round (discounted by the out-migration factor for the steps the
    path spends above the bottom rank, and amplified by the in-migration gain
    ``q`` for the steps that follow its bottom-rank visit), normalized by the
    per-round contraction ``1 - q*(1-m)**(P-1)``.
    """
    paths, m, r = net.paths, proto.m, proto.r
    if paths > 1 and m >= 1.0:
        raise DegenerateParameterError(f"undefined for m=1 with {paths} paths")
    w = (1.0 - m) ** (paths - 1)
    q = 1.0 + m * r * extrapolation_factor_eq(m, paths)
    denom = 1.0 - q * w
    if denom <= 0:
        raise DegenerateParameterError(
            f"per-round factor q*(1-m)**(P-1) = {q * w} is not contracting"
        )
    ahat = _alpha_hats(net, proto)
    alevel = agent_equilibrium(m, net.agents, paths).levels
    levels = []
    for p in range(paths):
        acc = sum((1.0 - m) ** (p - pp) * ahat[pp] * alevel[pp] for pp in range(p))
        acc += (1.0 - m) ** p * ahat[paths - 1] * alevel[paths - 1]
        acc += q * sum(
            (1.0 - m) ** (paths - 1 + p - pp) * ahat[pp] * alevel[pp]
            for pp in range(p, paths - 1)
        )
        levels.append(acc / denom)
    return tuple(levels)


def flow_equilibrium(net: NetworkConfig, proto: ProtocolParams) -> FlowEquilibrium:
    """Compute the flow cycle levels and classify the equilibrium.

    r=1 has no fixed point (divergent); a non-contracting per-round factor
    with r<1 (possible only in degenerate networks) is reported as
    non-convergent; levels that violate the strict descending rank order
    are inconsistent with the rotation pattern; otherwise the equilibrium
    is lossless iff the peak level fits under the per-path capacity.
    """
    paths, m, r = net.paths, proto.m, proto.r
    if paths > 1 and m >= 1.0:
        raise DegenerateParameterError(f"undefined for m=1 with {paths} paths")
    q = 1.0 + m * r * extrapolation_factor_eq(m, paths)
    if r == 1.0:
        return FlowEquilibrium(levels=None, q=q, classification=Classification.DIVERGENT_R1)
    w = (1.0 - m) ** (paths - 1)
    if 1.0 - q * w <= 0:
        return FlowEquilibrium(levels=None, q=q, classification=Classification.NON_CONVERGENT)
    levels = hypothetical_flow_levels(net, proto)
    if any(levels[p] < levels[p + 1] for p in range(paths - 1)):
        return FlowEquilibrium(
            levels=levels, q=q, classification=Classification.INCONSISTENT_WITH_P_STEP
        )
    if levels[0] <= net.capacity_per_path:
        cls = Classification.LOSSLESS
    else:
        cls = Classification.LOSSY
    return FlowEquilibrium(levels=levels, q=q, classification=cls)


def flow_trajectory(
    f_start: float, p: int, net: NetworkConfig, proto: ProtocolParams, t_offset: int
) -> float:
    """Flow on a rank-p path ``t_offset`` steps (a multiple of P) after a
    rank-p moment with flow ``f_start``, under capacity-free rotation.

    For r<1 this contracts geometrically toward the cycle level; for r=1 the
    rank-0 flow grows linearly (other ranks are not supported for r=1).
    """
    paths, m, r = net.paths, proto.m, proto.r
    if t_offset < 0 or t_offset % paths != 0:
        raise ValueError(f"t_offset must be a non-negative multiple of {paths}, got {t_offset}")
    if r == 1.0:
        if p != 0:
            raise UnsupportedRankError("r=1 trajectory is defined for rank 0 only")
        ahat = _alpha_hats(net, proto)
        alevel = agent_equilibrium(m, net.agents, paths).levels
        slope = (
            ((1.0 - m) ** (1 - paths) * sum(ahat[: paths - 1]) + ahat[paths - 1])
            * alevel[paths - 1]
            / paths
        )
        return f_start + slope * t_offset
    w = (1.0 - m) ** (paths - 1)
    q = 1.0 + m * r * extrapolation_factor_eq(m, paths)
    level = hypothetical_flow_levels(net, proto)[p]
    return (f_start - level) * (q * w) ** (t_offset // paths) + level


def lossy_bounds(net: NetworkConfig, proto: ProtocolParams) -> LossyBounds:
    """Flow-excursion bounds for a lossy equilibrium.

    The peak is bounded by one rotation round launched from exactly the
    capacity limit; the trough is bounded below by the multiplicative
    decrease followed by the out-migration decay (one step of it for
    rotation-breaking loss, P-1 steps for rotation-preserving loss).
    """
    eq = flow_equilibrium(net, proto)
    if eq.classification not in (Classification.LOSSY, Classification.DIVERGENT_R1):
        raise NotLossyError(f"equilibrium is {eq.classification.value}, not lossy")
    cap = net.capacity_per_path
    m, beta, paths = proto.m, proto.beta, net.paths
    upper = flow_trajectory(cap, 0, net, proto, paths)
    return LossyBounds(
        upper=upper,
        lower_type1=beta * (1.0 - m) ** (paths - 1) * cap,
        lower_type2=beta * (1.0 - m) * cap,
    )


@dataclass(frozen=True)
class ConsistencyVerdict:
    """Whether the closed-form flow levels respect the strict descending
    rank order required by round-robin rotation."""

    consistent: bool
    violated_ranks: Tuple[int, ...]


def check_p_step_consistency(net: NetworkConfig, proto: ProtocolParams) -> ConsistencyVerdict:
    """Check the rank ordering of the closed-form flow levels.

    A violated order (some rank carrying less flow than the rank below it)
    proves the rotation pattern cannot sustain itself for these parameters.
    The agent count enters all levels as one positive linear factor, so the
    verdict does not depend on it.
    """
    if proto.r >= 1.0:
        raise DegenerateParameterError("consistency check requires r < 1")
    levels = hypothetical_flow_levels(net, proto)
    violated = tuple(
        p for p in range(net.paths - 1) if levels[p] < levels[p + 1]
    )
    return ConsistencyVerdict(consistent=not violated, violated_ranks=violated)
