import math

import pytest

from mpccsim.compare import (
    INCONSISTENT_CLASS,
    LOSSLESS_CLASS,
    LOSSY_CLASS,
    InvalidGridError,
    baseline,
    default_m_grid,
    default_r_grid,
    delta_metrics,
    sweep,
)
from mpccsim.axioms import fairness_eta
from mpccsim.model import (
    ConstantAlpha,
    DegenerateParameterError,
    NetworkConfig,
    ProtocolParams,
    Seed,
    SlowStartAlpha,
)

NET = NetworkConfig(paths=3, capacity_total=36000.0, agents=1000)
ALPHA = ConstantAlpha(1.0)


def test_baseline_reference_values():
    base = baseline(NET, ALPHA, 0.7)
    assert base.efficiency == 0.7
    assert base.loss == pytest.approx(1000 / 36000)
    assert base.convergence == pytest.approx(0.7 * 36000 / (36000 + 1000))
    assert base.fairness == 0.0


def test_baseline_uses_peak_increase():
    base = baseline(NET, SlowStartAlpha(5, 1.0), 0.7)
    assert base.loss == pytest.approx(16 * 1000 / 36000)


def test_delta_lossless_loss_drop_is_exact():
    delta = delta_metrics(NET, ProtocolParams(ALPHA, 0.7, 0.1, 0.5))
    base = baseline(NET, ALPHA, 0.7)
    assert delta.class_label == LOSSLESS_CLASS
    assert delta.delta_lambda == -base.loss
    assert delta.delta_eps == pytest.approx(0.037, abs=2e-3)


def test_delta_lossy_efficiency_drop_is_exact():
    proto = ProtocolParams(ALPHA, 0.7, 0.1, 1.0)
    delta = delta_metrics(NET, proto)
    assert delta.class_label == LOSSY_CLASS
    assert delta.delta_eps == pytest.approx(0.7 * (0.9**2 - 1), rel=1e-12)
    assert delta.delta_eps < 0


def test_delta_propagates_degenerate_m1():
    with pytest.raises(DegenerateParameterError):
        delta_metrics(NET, ProtocolParams(ALPHA, 0.7, 1.0, 0.5))


def test_sweep_rejects_bad_grids():
    with pytest.raises(InvalidGridError):
        sweep(NET, ALPHA, 0.7, [], [0.0, 0.5])
    with pytest.raises(InvalidGridError):
        sweep(NET, ALPHA, 0.7, [0.1], [])
    with pytest.raises(InvalidGridError):
        sweep(NET, ALPHA, 0.7, [0.0], [0.5])  # m=0 outside the domain


def test_default_grids_match_documented_resolution():
    m = default_m_grid()
    r = default_r_grid()
    assert m[0] == 0.02 and m[-1] == 0.98 and len(m) == 49
    assert r[0] == 0.0 and r[-1] == 1.0 and len(r) == 21


def test_sweep_class_structure_on_reference_network():
    result = sweep(NET, ALPHA, 0.7, default_m_grid(), default_r_grid())
    lossless_m = result.lossless_m_values()
    # low migration rates admit no lossless equilibrium for any r
    assert min(lossless_m) > min(default_m_grid())
    low = [pt for pt in result.points if pt.m < min(lossless_m)]
    assert low and all(pt.class_label != LOSSLESS_CLASS for pt in low)

    lossy = [pt for pt in result.points if pt.class_label == LOSSY_CLASS]
    assert lossy and all(pt.delta_eps < 0 for pt in lossy)

    base = baseline(NET, ALPHA, 0.7)
    lossless = [pt for pt in result.points if pt.class_label == LOSSLESS_CLASS]
    assert lossless and all(pt.delta_lambda == -base.loss for pt in lossless)

    # positive efficiency deltas exist at low m (high reset softness helps)
    assert any(pt.delta_eps > 0 for pt in lossless if pt.m <= 0.2)

    inconsistent = [pt for pt in result.points if pt.class_label == INCONSISTENT_CLASS]
    for pt in inconsistent:
        assert math.isnan(pt.delta_eps)


def test_sweep_ranges_exclude_inconsistent_and_cover_classes():
    result = sweep(NET, ALPHA, 0.7, [0.1, 0.8], [0.0, 0.5, 1.0])
    for metric in ("delta_eps", "delta_lambda", "delta_gamma"):
        for cls in (LOSSLESS_CLASS, LOSSY_CLASS):
            for rng in result.ranges(metric, cls):
                assert rng.lo <= rng.hi
                assert not math.isnan(rng.lo)
    with pytest.raises(ValueError):
        result.ranges("delta_zeta", LOSSLESS_CLASS)


def test_sweep_with_fairness_is_deterministic():
    kwargs = dict(seed=Seed(5), fairness_samples=500, fairness_horizon=60)
    a = sweep(NET, ALPHA, 0.7, [0.1, 0.3], [0.0, 1.0], **kwargs)
    b = sweep(NET, ALPHA, 0.7, [0.1, 0.3], [0.0, 1.0], **kwargs)
    assert a.points == b.points
    assert all(not math.isnan(pt.delta_eta) for pt in a.points)


def test_fairness_improves_with_high_migration():
    # within the lossless class, near-total migration keeps windows small
    # and synchronized; low migration lets windows spread out
    low = fairness_eta(ProtocolParams(ALPHA, 0.7, 0.1, 0.0), 3, None, 10_000, 400, Seed(60))
    high = fairness_eta(ProtocolParams(ALPHA, 0.7, 0.98, 0.0), 3, None, 10_000, 400, Seed(61))
    gap = low.eta - high.eta
    assert gap > 3 * math.hypot(low.stderr, high.stderr)
