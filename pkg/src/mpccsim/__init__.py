"""Multi-path congestion control with greedy end-host path selection:
stochastic simulation, expected dynamics, closed-form equilibria, and
axiomatic protocol ratings."""

from .axioms import (
    AxiomRating,
    FairnessEstimate,
    MarkovAgent,
    convergence_mpcc,
    efficiency_mpcc,
    fairness_eta,
    fairness_trajectory,
    loss_mpcc,
    markov_step_lossless,
    markov_step_lossy,
    rate_protocol,
)
from .compare import (
    BaselineRating,
    DeltaMetrics,
    InvalidGridError,
    SweepResult,
    baseline,
    delta_metrics,
    default_m_grid,
    default_r_grid,
    sweep,
)
from .equilibrium import (
    AgentEquilibrium,
    Classification,
    ConsistencyVerdict,
    FlowEquilibrium,
    LossyBounds,
    NotLossyError,
    UnrateableError,
    UnsupportedRankError,
    agent_equilibrium,
    agent_trajectory,
    check_p_step_consistency,
    flow_equilibrium,
    flow_trajectory,
    hypothetical_flow_levels,
    lossy_bounds,
)
from .expected import (
    ContinuityDistribution,
    ExpectedState,
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
from .model import (
    AlphaFunction,
    ConstantAlpha,
    DegenerateParameterError,
    DegenerateStateError,
    InvalidAssignmentError,
    InvalidParameterError,
    NetworkConfig,
    ProtocolParams,
    Seed,
    SlowStartAlpha,
    TableAlpha,
    alpha_eval,
    alpha_eval_array,
    alpha_max,
    validate,
)
from .stochastic import (
    AgentState,
    SimState,
    Trace,
    counts_to_assignment,
    ensemble_mean_flows,
    init_state,
    run_stochastic,
    step_stochastic,
)

__version__ = "0.1.0"
