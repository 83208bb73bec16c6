"""Protocol ratings: efficiency, loss avoidance, convergence, and fairness.

The first three ratings are closed-form bounds read off the equilibrium:
efficiency is the guaranteed floor on bottleneck utilization, loss avoidance
the ceiling on the relative capacity overshoot, convergence the guaranteed
tightness of the flow band.  Fairness is the cross-agent variance of
congestion-window size, estimated by ensembles of a per-agent Markov chain
(one chain per agent; migrations reset the window to an ``r`` share,
losses scale it by ``beta``, otherwise it grows by ``alpha``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .equilibrium import (
    Classification,
    FlowEquilibrium,
    UnrateableError,
    agent_equilibrium,
    flow_equilibrium,
)
from .expected import expected_alpha_limit, extrapolation_factor_eq
from .model import NetworkConfig, ProtocolParams, Seed, alpha_eval, alpha_eval_array

_RATEABLE = (Classification.LOSSLESS, Classification.LOSSY, Classification.DIVERGENT_R1)


@dataclass(frozen=True)
class AxiomRating:
    """Best ratings a protocol earns on this network: utilization floor
    ``efficiency``, loss-rate ceiling ``loss``, flow-band tightness
    ``convergence``, window-variance ceiling ``fairness`` (with its standard
    error), and the equilibrium classification they were derived from."""

    efficiency: float
    loss: float
    convergence: float
    fairness: float
    fairness_stderr: float
    classification: Classification


@dataclass(frozen=True)
class MarkovAgent:
    """State of one congestion-window chain: continuity time, window size,
    and whether the previous step was a loss (a path never loses twice in a
    row, so a post-loss step cannot lose again)."""

    tau: int
    cwnd: float
    post_loss: bool = False


def _require_rateable(eq: FlowEquilibrium) -> None:
    if eq.classification not in _RATEABLE:
        raise UnrateableError(
            f"no rating defined for classification {eq.classification.value}"
        )


def _lossy_terms(net: NetworkConfig, proto: ProtocolParams) -> Tuple[float, float, float]:
    """(sum of expected increases over the ranks above the bottom, the
    bottom-rank expected increase, the bottom-rank agent level) used by the
    lossy-case bounds."""
    paths, m = net.paths, proto.m
    ahat = [expected_alpha_limit(proto.alpha, p, m, paths) for p in range(paths)]
    a_last = agent_equilibrium(m, net.agents, paths).levels[paths - 1]
    return sum(ahat[: paths - 1]), ahat[paths - 1], a_last


def efficiency_mpcc(eq: FlowEquilibrium, net: NetworkConfig, proto: ProtocolParams) -> float:
    """Utilization floor: bottom cycle level over capacity when lossless,
    else the post-loss, post-drain multiple of capacity."""
    _require_rateable(eq)
    if eq.classification is Classification.LOSSLESS:
        return net.paths * eq.levels[net.paths - 1] / net.capacity_total
    return proto.beta * (1.0 - proto.m) ** (net.paths - 1)


def loss_mpcc(eq: FlowEquilibrium, net: NetworkConfig, proto: ProtocolParams) -> float:
    """Loss-rate ceiling: zero when lossless; otherwise the relative
    overshoot of one rotation round launched from the capacity limit."""
    _require_rateable(eq)
    if eq.classification is Classification.LOSSLESS:
        return 0.0
    paths, m = net.paths, proto.m
    cap = net.capacity_per_path
    below_sum, top_hat, a_last = _lossy_terms(net, proto)
    if proto.r == 1.0:
        return ((1.0 - m) ** (1 - paths) * below_sum + top_hat) * a_last / cap
    w = (1.0 - m) ** (paths - 1)
    q = 1.0 + m * proto.r * extrapolation_factor_eq(m, paths)
    return q * w - 1.0 + (q * below_sum + top_hat) * a_last / cap


def convergence_mpcc(eq: FlowEquilibrium, net: NetworkConfig, proto: ProtocolParams) -> float:
    """Flow-band tightness: bottom over top cycle level when lossless, else
    the lossy utilization floor relative to the bounded peak."""
    _require_rateable(eq)
    if eq.classification is Classification.LOSSLESS:
        return eq.levels[net.paths - 1] / eq.levels[0]
    lam = loss_mpcc(eq, net, proto)
    return proto.beta * (1.0 - proto.m) ** (net.paths - 1) / (lam + 1.0)


def markov_step_lossless(
    s: MarkovAgent, proto: ProtocolParams, paths: int, rng: np.random.Generator
) -> MarkovAgent:
    """One transition of the lossless window chain.  Migration is gated off
    when ``tau mod P == P-1`` (the agent is then on the least-utilized path
    of the rotation and has nowhere better to go)."""
    gate_open = s.tau % paths != paths - 1
    if gate_open and rng.random() < proto.m:
        return MarkovAgent(0, proto.r * s.cwnd)
    return MarkovAgent(s.tau + 1, s.cwnd + alpha_eval(proto.alpha, s.tau))


def markov_step_lossy(
    s: MarkovAgent, proto: ProtocolParams, paths: int, p_loss: float, rng: np.random.Generator
) -> MarkovAgent:
    """One transition of the lossy window chain: as the lossless chain, but a
    non-migrating agent suffers a ``beta`` decrease with probability
    ``p_loss`` unless its path lost in the previous step."""
    gate_open = s.tau % paths != paths - 1
    if gate_open and rng.random() < proto.m:
        return MarkovAgent(0, proto.r * s.cwnd, post_loss=False)
    p_eff = 0.0 if s.post_loss else p_loss
    if p_eff > 0.0 and rng.random() < p_eff:
        return MarkovAgent(0, proto.beta * s.cwnd, post_loss=True)
    return MarkovAgent(s.tau + 1, s.cwnd + alpha_eval(proto.alpha, s.tau), post_loss=False)


def _final_cwnds(
    proto: ProtocolParams,
    paths: int,
    p_loss: Optional[float],
    chains: int,
    horizon: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Window sizes of ``chains`` independent chains after ``horizon`` steps,
    all started at (tau=0, cwnd=0)."""
    tau = np.zeros(chains, dtype=np.int64)
    cwnd = np.zeros(chains)
    post_loss = np.zeros(chains, dtype=bool)
    lossy = p_loss is not None and p_loss > 0.0
    for _ in range(horizon):
        gate_open = (tau % paths) != (paths - 1)
        migrate = gate_open & (rng.random(chains) < proto.m)
        if lossy:
            p_eff = np.where(post_loss, 0.0, p_loss)
            lose = ~migrate & (rng.random(chains) < p_eff)
        else:
            lose = np.zeros(chains, dtype=bool)
        grown = cwnd + alpha_eval_array(proto.alpha, tau)
        cwnd = np.where(migrate, proto.r * cwnd, np.where(lose, proto.beta * cwnd, grown))
        tau = np.where(migrate | lose, 0, tau + 1)
        post_loss = lose
    return cwnd


def fairness_trajectory(
    proto: ProtocolParams,
    paths: int,
    p_loss: Optional[float],
    samples: int,
    horizon: int,
    seed: Seed,
) -> np.ndarray:
    """Cross-chain window variance at every step 0..horizon (shows how the
    variance settles to its ceiling)."""
    rng = seed.generator()
    tau = np.zeros(samples, dtype=np.int64)
    cwnd = np.zeros(samples)
    post_loss = np.zeros(samples, dtype=bool)
    lossy = p_loss is not None and p_loss > 0.0
    variances = np.empty(horizon + 1)
    variances[0] = 0.0
    for k in range(horizon):
        gate_open = (tau % paths) != (paths - 1)
        migrate = gate_open & (rng.random(samples) < proto.m)
        if lossy:
            p_eff = np.where(post_loss, 0.0, p_loss)
            lose = ~migrate & (rng.random(samples) < p_eff)
        else:
            lose = np.zeros(samples, dtype=bool)
        grown = cwnd + alpha_eval_array(proto.alpha, tau)
        cwnd = np.where(migrate, proto.r * cwnd, np.where(lose, proto.beta * cwnd, grown))
        tau = np.where(migrate | lose, 0, tau + 1)
        post_loss = lose
        variances[k + 1] = np.var(cwnd, ddof=1)
    return variances


@dataclass(frozen=True)
class FairnessEstimate:
    eta: float
    stderr: float


def fairness_eta(
    proto: ProtocolParams,
    paths: int,
    p_loss: Optional[float],
    samples: int,
    horizon: int,
    seed: Seed,
) -> FairnessEstimate:
    """Estimate the window-variance ceiling by simulating ``samples``
    independent chains for ``horizon`` steps.

    ``p_loss=None`` selects the lossless chain; a float selects the lossy
    chain with that per-step loss probability.  ``eta`` is the sample
    variance of the final window sizes; its standard error comes from the
    spread of per-batch variances over 10 equal batches.
    """
    if samples < 100:
        raise ValueError(f"samples must be >= 100, got {samples}")
    if horizon < paths:
        raise ValueError(f"horizon must be >= paths, got {horizon}")
    n_batches = 10
    samples -= samples % n_batches
    finals = _final_cwnds(proto, paths, p_loss, samples, horizon, seed.generator())
    eta = float(np.var(finals, ddof=1))
    batch_vars = np.var(finals.reshape(n_batches, -1), axis=1, ddof=1)
    stderr = float(np.std(batch_vars, ddof=1) / math.sqrt(n_batches))
    return FairnessEstimate(eta=eta, stderr=stderr)


def rate_protocol(
    net: NetworkConfig,
    proto: ProtocolParams,
    *,
    seed: Optional[Seed] = None,
    p_loss: float = 0.0,
    fairness_samples: int = 10_000,
    fairness_horizon: int = 500,
) -> AxiomRating:
    """All four ratings for one protocol on one network.

    Fairness is estimated on the chain matching the classification (lossless
    chain for lossless equilibria, lossy chain at ``p_loss`` otherwise); pass
    ``seed=None`` to skip the estimate (fairness reported as NaN).
    """
    eq = flow_equilibrium(net, proto)
    _require_rateable(eq)
    eps = efficiency_mpcc(eq, net, proto)
    lam = loss_mpcc(eq, net, proto)
    gam = convergence_mpcc(eq, net, proto)
    if seed is None:
        eta, stderr = math.nan, math.nan
    else:
        chain_p = None if eq.classification is Classification.LOSSLESS else p_loss
        est = fairness_eta(proto, net.paths, chain_p, fairness_samples, fairness_horizon, seed)
        eta, stderr = est.eta, est.stderr
    return AxiomRating(
        efficiency=eps,
        loss=lam,
        convergence=gam,
        fairness=eta,
        fairness_stderr=stderr,
        classification=eq.classification,
    )
