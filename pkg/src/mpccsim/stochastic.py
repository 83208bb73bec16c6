"""Agent-level stochastic simulation of the multi-path dynamics.

Each step is synchronous and reads the time-t per-path flows: every agent not
on the least-utilized path migrates there with probability ``m`` (scaling its
window by ``r`` and resetting its continuity time); every non-migrating agent
applies the congestion-control rule against its current path's time-t flow
(additive increase below capacity, multiplicative decrease above).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterator, List, Sequence, Tuple, Union

import numpy as np

from .model import (
    InvalidAssignmentError,
    NetworkConfig,
    ProtocolParams,
    Seed,
    alpha_eval_array,
)

Assignment = Union[str, Sequence[int]]  # "uniform" | "round_robin" | explicit paths


@dataclass(frozen=True)
class AgentState:
    """One agent: congestion window (MSS), continuity time (steps since last
    loss or path switch), and current path index."""

    cwnd: float
    continuity_time: int
    path: int


@dataclass
class SimState:
    """Population state at one time step.  Agent fields are parallel arrays;
    per-path aggregates are recomputed from them."""

    t: int
    cwnd: np.ndarray
    tau: np.ndarray
    path: np.ndarray
    paths: int

    @property
    def agents(self) -> int:
        return len(self.cwnd)

    def agent(self, i: int) -> AgentState:
        return AgentState(float(self.cwnd[i]), int(self.tau[i]), int(self.path[i]))

    def path_counts(self) -> np.ndarray:
        return np.bincount(self.path, minlength=self.paths)

    def path_flows(self) -> np.ndarray:
        return np.bincount(self.path, weights=self.cwnd, minlength=self.paths)

    def loss_flags(self, net: NetworkConfig) -> np.ndarray:
        return self.path_flows() > net.capacity_per_path


def initial_paths(net: NetworkConfig, assignment: Assignment, rng: np.random.Generator) -> np.ndarray:
    if isinstance(assignment, str):
        if assignment == "uniform":
            return rng.integers(0, net.paths, size=net.agents)
        if assignment == "round_robin":
            return np.arange(net.agents) % net.paths
        raise InvalidAssignmentError(
            f"unknown assignment {assignment!r} (expected 'uniform', 'round_robin', or a path list)"
        )
    paths = np.asarray(list(assignment))
    if paths.shape != (net.agents,):
        raise InvalidAssignmentError(
            f"explicit assignment must list {net.agents} paths, got {paths.shape}"
        )
    if paths.size and (paths.min() < 0 or paths.max() >= net.paths):
        raise InvalidAssignmentError(f"path indices must be in [0, {net.paths})")
    return paths.astype(np.int64)


def counts_to_assignment(counts: Sequence[int]) -> List[int]:
    """Explicit assignment placing ``counts[p]`` agents on path ``p``."""
    out: List[int] = []
    for p, c in enumerate(counts):
        out.extend([p] * int(c))
    return out


def init_state(
    net: NetworkConfig, assignment: Assignment, rng: np.random.Generator
) -> SimState:
    """All windows and continuity times start at zero; paths per ``assignment``."""
    return SimState(
        t=0,
        cwnd=np.zeros(net.agents),
        tau=np.zeros(net.agents, dtype=np.int64),
        path=initial_paths(net, assignment, rng),
        paths=net.paths,
    )


def step_stochastic(
    state: SimState, net: NetworkConfig, proto: ProtocolParams, rng: np.random.Generator
) -> SimState:
    """One synchronous step.

    Migration decisions and the loss check both read the time-t flows; a
    migrating agent only applies the ``r`` reset (no growth or decrease in
    the same step), and agents already on the least-utilized path never
    migrate.  Ties for the least-utilized path go to the lowest index.
    """
    cap = net.capacity_per_path
    flows = state.path_flows()
    pi_min = int(np.argmin(flows / cap))
    lossy = flows > cap

    migrate = (state.path != pi_min) & (rng.random(state.agents) < proto.m)
    on_lossy = lossy[state.path]
    grown = state.cwnd + alpha_eval_array(proto.alpha, state.tau)
    new_cwnd = np.where(
        migrate, proto.r * state.cwnd, np.where(on_lossy, proto.beta * state.cwnd, grown)
    )
    new_tau = np.where(migrate | on_lossy, 0, state.tau + 1)
    new_path = np.where(migrate, pi_min, state.path)
    return SimState(t=state.t + 1, cwnd=new_cwnd, tau=new_tau, path=new_path, paths=state.paths)


@dataclass
class Trace:
    """Per-step per-path record of a run: agent counts, flows, and loss flags
    (flow above per-path capacity at that step)."""

    t: np.ndarray
    counts: np.ndarray  # (steps, paths)
    flows: np.ndarray  # (steps, paths)
    loss: np.ndarray  # (steps, paths) bool

    @property
    def steps(self) -> int:
        return len(self.t)

    @property
    def paths(self) -> int:
        return self.counts.shape[1]

    def rows(self) -> Iterator[Tuple[int, int, float, float, bool]]:
        for k in range(self.steps):
            for p in range(self.paths):
                yield int(self.t[k]), p, self.counts[k, p], self.flows[k, p], bool(self.loss[k, p])

    def write_csv(self, out: IO[str]) -> None:
        out.write("t,path,agents,flow,loss\n")
        for t, p, a, f, lost in self.rows():
            a_txt = str(int(a)) if float(a).is_integer() else f"{a:.10g}"
            out.write(f"{t},{p},{a_txt},{f:.10g},{int(lost)}\n")


def run_stochastic(
    net: NetworkConfig,
    proto: ProtocolParams,
    horizon: int,
    seed: Seed,
    assignment: Assignment = "round_robin",
) -> Trace:
    """Simulate ``horizon`` steps; the trace includes the initial state and is
    a deterministic function of the seed."""
    if horizon < 0:
        raise ValueError(f"horizon must be non-negative, got {horizon}")
    rng = seed.generator()
    state = init_state(net, assignment, rng)
    t = np.arange(horizon + 1)
    counts = np.empty((horizon + 1, net.paths))
    flows = np.empty((horizon + 1, net.paths))
    loss = np.empty((horizon + 1, net.paths), dtype=bool)
    for k in range(horizon + 1):
        f = state.path_flows()
        counts[k] = state.path_counts()
        flows[k] = f
        loss[k] = f > net.capacity_per_path
        if k < horizon:
            state = step_stochastic(state, net, proto, rng)
    return Trace(t=t, counts=counts, flows=flows, loss=loss)


def ensemble_mean_flows(
    net: NetworkConfig,
    proto: ProtocolParams,
    horizon: int,
    seed: Seed,
    trials: int,
    assignment: Assignment = "round_robin",
) -> np.ndarray:
    """Mean per-path flows over ``trials`` independent runs (trial ``i`` uses
    the stream ``(seed.base, i)``).  Shape: (horizon+1, paths)."""
    acc = np.zeros((horizon + 1, net.paths))
    for i in range(trials):
        acc += run_stochastic(net, proto, horizon, seed.trial(i), assignment).flows
    return acc / trials
