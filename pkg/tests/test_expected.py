import numpy as np
import pytest

from mpccsim.expected import (
    continuity_distribution,
    expected_alpha_limit,
    expected_alpha_theta,
    extrapolation_factor_eq,
    extrapolation_factor_state,
    initial_expected_state,
    rank_paths,
    run_expected,
    step_expected,
)
from mpccsim.model import (
    ConstantAlpha,
    DegenerateParameterError,
    DegenerateStateError,
    NetworkConfig,
    ProtocolParams,
    SlowStartAlpha,
    TableAlpha,
    alpha_eval,
)

NET = NetworkConfig(paths=3, capacity_total=36000.0, agents=1000)
REF = ProtocolParams(ConstantAlpha(1.0), beta=0.7, m=0.1, r=0.5)


def test_extrapolation_factor_state():
    assert extrapolation_factor_state(1000, 1000) == 0.0
    assert extrapolation_factor_state(500, 1000) == 1.0
    assert extrapolation_factor_state(298.89, 1000) == pytest.approx(2.3457, abs=1e-4)
    with pytest.raises(DegenerateStateError):
        extrapolation_factor_state(0.0, 1000)


def test_extrapolation_factor_eq():
    assert extrapolation_factor_eq(0.37, 1) == 0.0
    assert extrapolation_factor_eq(0.1, 3) == pytest.approx(0.19 / 0.081)
    with pytest.raises(DegenerateParameterError):
        extrapolation_factor_eq(1.0, 3)


def test_extrapolation_factors_agree_at_equilibrium():
    # state-based factor at the bottom-rank cycle level equals the closed form
    from mpccsim.equilibrium import agent_equilibrium

    bottom = agent_equilibrium(0.1, 1000, 3).levels[2]
    assert extrapolation_factor_state(bottom, 1000) == pytest.approx(
        extrapolation_factor_eq(0.1, 3), rel=1e-12
    )


def test_continuity_distribution_fresh_path_is_point_mass():
    for p in range(3):
        d = continuity_distribution(p, 0, 0.1, 3)
        assert d.support == {0: 1.0}


def test_continuity_distribution_arrival_mass():
    d = continuity_distribution(0, 30, 0.1, 3)
    assert d.mass(0) == pytest.approx(1 - 0.9**2)
    assert d.mass(1) == 0.0
    assert d.mass(3) == pytest.approx(0.19 * 0.81)
    assert d.mass(30) == pytest.approx(0.81**10)


@pytest.mark.parametrize("m", [0.01, 0.2, 0.5, 0.99])
@pytest.mark.parametrize("paths", [2, 3, 5, 6])
def test_continuity_distribution_normalizes(m, paths):
    for p in range(paths):
        for theta in (0, 1, 7, 100, 1000):
            d = continuity_distribution(p, theta, m, paths)
            assert all(v >= 0 for v in d.support.values())
            assert d.total() == pytest.approx(1.0, abs=1e-9)


def test_expected_alpha_theta_constant_is_constant():
    assert expected_alpha_theta(ConstantAlpha(2.5), 1, 17, 0.3, 3) == pytest.approx(2.5)


def test_expected_alpha_theta_point_mass_start():
    assert expected_alpha_theta(SlowStartAlpha(5, 1.0), 0, 0, 0.1, 3) == alpha_eval(
        SlowStartAlpha(5, 1.0), 0
    )


def _brute_limit(alpha, p, m, paths, terms=4000):
    g = (1 - m) ** (paths - 1)
    return sum((1 - g) * g**k * alpha_eval(alpha, paths * k + p) for k in range(terms))


def test_expected_alpha_limit_against_brute_force():
    for alpha in (ConstantAlpha(1.0), SlowStartAlpha(5, 1.0), TableAlpha((0.5, 4.0, 2.0), 1.0)):
        for paths in (2, 3, 5):
            for m in (0.05, 0.3, 0.9):
                for p in range(paths):
                    assert expected_alpha_limit(alpha, p, m, paths) == pytest.approx(
                        _brute_limit(alpha, p, m, paths), rel=1e-12
                    )


def test_expected_alpha_limit_constant_telescopes():
    assert expected_alpha_limit(ConstantAlpha(1.0), 2, 0.37, 3) == pytest.approx(1.0, rel=1e-15)


def test_expected_alpha_limit_m_one_takes_first_term():
    f = SlowStartAlpha(5, 1.0)
    assert expected_alpha_limit(f, 1, 1.0, 2) == alpha_eval(f, 1)


def test_expected_alpha_theta_converges_to_limit():
    f = SlowStartAlpha(5, 1.0)
    limit = expected_alpha_limit(f, 0, 0.1, 3)
    values = [expected_alpha_theta(f, 0, theta, 0.1, 3) for theta in (10, 100, 1000)]
    errors = [abs(v - limit) for v in values]
    assert errors[0] > errors[1] > errors[2] or errors[2] < 1e-12
    assert values[2] == pytest.approx(limit, rel=1e-9)


def test_expected_alpha_theta_matches_distribution_expectation():
    f = TableAlpha((0.5, 4.0, 2.0, 8.0), 1.0)
    for p in range(3):
        for theta in (0, 2, 5, 11):
            d = continuity_distribution(p, theta, 0.25, 3)
            direct = sum(mass * alpha_eval(f, tau) for tau, mass in d.support.items())
            assert expected_alpha_theta(f, p, theta, 0.25, 3) == pytest.approx(direct, rel=1e-12)


def test_rank_paths_tie_breaking_matches_min_rule():
    # equal flows: lowest index must take the bottom rank (it is the migration target)
    assert rank_paths((5.0, 5.0, 1.0)) == (1, 0, 2)
    assert rank_paths((0.0, 0.0, 0.0)) == (2, 1, 0)


def test_step_expected_single_path_reduces_to_aimd():
    net = NetworkConfig(paths=1, capacity_total=100.0, agents=10)
    proto = ProtocolParams(ConstantAlpha(1.0), beta=0.5, m=0.2, r=0.5)
    state = initial_expected_state(net)
    flows = [state.flows[0]]
    for _ in range(30):
        state = step_expected(state, net, proto)
        assert state.agents[0] == pytest.approx(10.0)
        flows.append(state.flows[0])
    # grows by alpha*N below capacity, multiplicative decrease above
    assert any(f > 100.0 for f in flows)
    for a, b in zip(flows, flows[1:]):
        if a <= 100.0:
            assert b == pytest.approx(a + 10.0)
        else:
            assert b == pytest.approx(0.5 * a)


def test_step_expected_conserves_agents():
    state = initial_expected_state(NET, agents=[700, 200, 100])
    for _ in range(200):
        state = step_expected(state, NET, REF)
        assert sum(state.agents) == pytest.approx(NET.agents, rel=1e-9)


def test_run_expected_horizon_zero():
    initial = initial_expected_state(NET)
    assert run_expected(NET, REF, 0, initial) == [initial]


def test_run_expected_converges_to_flow_cycle():
    from mpccsim.equilibrium import flow_equilibrium

    levels = np.sort(flow_equilibrium(NET, REF).levels)
    states = run_expected(NET, REF, 400, initial_expected_state(NET, agents=[400, 333, 267]))
    for s in states[350:]:
        assert np.allclose(np.sort(s.flows), levels, rtol=5e-4)
    # lossless: capacity never exceeded after the transient
    assert all(f <= NET.capacity_per_path for s in states[50:] for f in s.flows)


def test_run_expected_agent_cycle_levels():
    from mpccsim.equilibrium import agent_equilibrium

    levels = np.sort(agent_equilibrium(0.1, 1000, 3).levels)
    states = run_expected(NET, REF, 150, initial_expected_state(NET, agents=[700, 200, 100]))
    for s in states[100:]:
        assert np.allclose(np.sort(s.agents), levels, rtol=1e-3)


def test_run_expected_r1_recurring_loss_breaks_rotation():
    proto = ProtocolParams(ConstantAlpha(1.0), beta=0.7, m=0.1, r=1.0)
    states = run_expected(NET, proto, 300, initial_expected_state(NET, agents=[400, 333, 267]))
    cap = NET.capacity_per_path
    loss_steps = [s.t for s in states if any(f > cap for f in s.flows)]
    assert len([t for t in loss_steps if t > 50]) >= 2  # loss keeps recurring

    # right after a loss, the overloaded top path drops straight to the bottom rank
    broke_rotation = False
    for s, nxt in zip(states, states[1:]):
        ranks_now, ranks_next = s.ranks(), nxt.ranks()
        for i in range(3):
            if s.flows[i] > cap and ranks_now[i] == 0 and ranks_next[i] == 2:
                broke_rotation = True
    assert broke_rotation


def test_run_expected_type1_lossy_is_periodic():
    proto = ProtocolParams(ConstantAlpha(1.0), beta=0.7, m=0.45, r=0.9)
    states = run_expected(NET, proto, 400, initial_expected_state(NET, agents=[400, 333, 267]))
    cap = NET.capacity_per_path
    assert any(f > cap for s in states[100:] for f in s.flows)  # genuinely lossy
    flows = np.array([s.flows for s in states])
    tail = flows[300:]
    # some period L <= 60 repeats the tail pattern
    best = min(
        np.max(np.abs(tail[:40] - flows[300 + L : 300 + L + 40]) / tail[:40])
        for L in range(3, 61, 3)
    )
    assert best < 1e-6


def test_step_expected_empty_min_path_uses_exact_other_flow():
    # all agents piled on one path: the empty target path must receive
    # exactly m*r*(flow elsewhere) in expectation
    state = initial_expected_state(NET, agents=[1000, 0, 0], flows=[9000.0, 0.0, 0.0])
    nxt = step_expected(state, NET, REF)
    target = state.ranks().index(2)
    assert target in (1, 2)
    assert nxt.flows[target] == pytest.approx(0.1 * 0.5 * 9000.0)


def test_theta_resets_only_after_loss():
    proto = ProtocolParams(ConstantAlpha(1.0), beta=0.7, m=0.1, r=1.0)
    state = initial_expected_state(NET, agents=[400, 333, 267])
    for _ in range(120):
        nxt = step_expected(state, NET, proto)
        for i in range(3):
            if state.flows[i] > NET.capacity_per_path:
                assert nxt.theta[i] == 0
            else:
                assert nxt.theta[i] == state.theta[i] + 1
        state = nxt
