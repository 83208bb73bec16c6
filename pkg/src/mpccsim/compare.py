"""Baseline ratings without path selection, and sweeps of the rating deltas.

The baseline scenario pins each agent to a path with an optimal static split
(N/P agents per path) and rates the plain congestion-control protocol there.
Delta metrics subtract the baseline rating from the multi-path rating, and
the sweep maps those deltas over a grid of (m, r), split by equilibrium
class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from .axioms import rate_protocol
from .equilibrium import Classification, flow_equilibrium
from .model import AlphaFunction, NetworkConfig, ProtocolParams, Seed, alpha_max

LOSSLESS_CLASS = "lossless"
LOSSY_CLASS = "lossy"
INCONSISTENT_CLASS = "inconsistent"

METRICS = ("delta_eps", "delta_lambda", "delta_gamma", "delta_eta")


class InvalidGridError(ValueError):
    """A sweep grid is empty or out of the parameter domain."""


@dataclass(frozen=True)
class BaselineRating:
    """Ratings of the static-split scenario: utilization floor ``beta``
    (decrease applied at the capacity limit), loss ceiling from every agent
    increasing at once on a full path, the band those two imply, and perfect
    fairness from the synchronized windows."""

    efficiency: float
    loss: float
    convergence: float
    fairness: float


def baseline(net: NetworkConfig, alpha: AlphaFunction, beta: float) -> BaselineRating:
    a_max = alpha_max(alpha)
    c, n = net.capacity_total, net.agents
    return BaselineRating(
        efficiency=beta,
        loss=a_max * n / c,
        convergence=beta * c / (c + a_max * n),
        fairness=0.0,
    )


@dataclass(frozen=True)
class DeltaMetrics:
    """Rating changes caused by enabling path selection, one (m, r) point."""

    m: float
    r: float
    class_label: str
    delta_eps: float
    delta_lambda: float
    delta_gamma: float
    delta_eta: float
    eta_stderr: float


def _class_label(cls: Classification) -> str:
    if cls is Classification.LOSSLESS:
        return LOSSLESS_CLASS
    if cls in (Classification.LOSSY, Classification.DIVERGENT_R1):
        return LOSSY_CLASS
    return INCONSISTENT_CLASS


def delta_metrics(
    net: NetworkConfig,
    proto: ProtocolParams,
    *,
    seed: Optional[Seed] = None,
    p_loss: float = 0.0,
    fairness_samples: int = 10_000,
    fairness_horizon: int = 500,
) -> DeltaMetrics:
    """Multi-path rating minus baseline rating for one protocol."""
    base = baseline(net, proto.alpha, proto.beta)
    rating = rate_protocol(
        net,
        proto,
        seed=seed,
        p_loss=p_loss,
        fairness_samples=fairness_samples,
        fairness_horizon=fairness_horizon,
    )
    return DeltaMetrics(
        m=proto.m,
        r=proto.r,
        class_label=_class_label(rating.classification),
        delta_eps=rating.efficiency - base.efficiency,
        delta_lambda=rating.loss - base.loss,
        delta_gamma=rating.convergence - base.convergence,
        delta_eta=rating.fairness - base.fairness,
        eta_stderr=rating.fairness_stderr,
    )


@dataclass(frozen=True)
class MetricRange:
    """Min/max of one delta metric over the valid r values at one m."""

    m: float
    class_label: str
    lo: float
    hi: float


@dataclass
class SweepResult:
    """Per-point delta table plus per-m, per-class metric ranges.

    Points whose equilibrium is inconsistent with rank rotation are kept in
    the table (labelled, deltas NaN) but excluded from every range.
    """

    points: List[DeltaMetrics]

    def ranges(self, metric: str, class_label: str) -> List[MetricRange]:
        if metric not in METRICS:
            raise ValueError(f"unknown metric {metric!r}, expected one of {METRICS}")
        grouped: Dict[float, List[float]] = {}
        for pt in self.points:
            if pt.class_label != class_label:
                continue
            value = getattr(pt, metric)
            if math.isnan(value):
                continue
            grouped.setdefault(pt.m, []).append(value)
        return [
            MetricRange(m=m, class_label=class_label, lo=min(vals), hi=max(vals))
            for m, vals in sorted(grouped.items())
        ]

    def lossless_m_values(self) -> List[float]:
        return sorted({pt.m for pt in self.points if pt.class_label == LOSSLESS_CLASS})


def default_m_grid() -> List[float]:
    return [round(0.02 * k, 10) for k in range(1, 50)]  # 0.02 .. 0.98


def default_r_grid() -> List[float]:
    return [round(0.05 * k, 10) for k in range(0, 21)]  # 0.0 .. 1.0


def sweep(
    net: NetworkConfig,
    alpha: AlphaFunction,
    beta: float,
    m_grid: Sequence[float],
    r_grid: Sequence[float],
    *,
    seed: Optional[Seed] = None,
    p_loss: float = 0.0,
    fairness_samples: int = 10_000,
    fairness_horizon: int = 500,
) -> SweepResult:
    """Evaluate the delta metrics over the (m, r) grid.

    Fairness estimates run only when a seed is given; grid point (i, j) then
    uses its own derived stream, so results are a pure function of the
    inputs regardless of evaluation order.
    """
    if not m_grid or not r_grid:
        raise InvalidGridError("m and r grids must be non-empty")
    if any(not 0.0 < m <= 1.0 for m in m_grid):
        raise InvalidGridError("m grid values must lie in (0, 1]")
    if any(not 0.0 <= r <= 1.0 for r in r_grid):
        raise InvalidGridError("r grid values must lie in [0, 1]")
    points: List[DeltaMetrics] = []
    for i, m in enumerate(m_grid):
        for j, r in enumerate(r_grid):
            proto = ProtocolParams(alpha=alpha, beta=beta, m=m, r=r)
            cls = flow_equilibrium(net, proto).classification
            if cls not in (Classification.LOSSLESS, Classification.LOSSY, Classification.DIVERGENT_R1):
                points.append(
                    DeltaMetrics(
                        m=m,
                        r=r,
                        class_label=_class_label(cls),
                        delta_eps=math.nan,
                        delta_lambda=math.nan,
                        delta_gamma=math.nan,
                        delta_eta=math.nan,
                        eta_stderr=math.nan,
                    )
                )
                continue
            point_seed = seed.child(i, j) if seed is not None else None
            points.append(
                delta_metrics(
                    net,
                    proto,
                    seed=point_seed,
                    p_loss=p_loss,
                    fairness_samples=fairness_samples,
                    fairness_horizon=fairness_horizon,
                )
            )
    return SweepResult(points=points)
