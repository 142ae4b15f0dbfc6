"""Solvers and simulation tools for small-jump Markov control problems.

The package computes the value of a pure-jump control problem by backward
dynamic programming on a probability-weighted chain, solves the diffusive
limit equation plus its first-order correction, and measures the gap between
the two empirically (deterministic chain evaluation and Monte Carlo).
"""

from .config import MeshOverrides, RunConfig, load_model_config
from .diffusion import (
    ArgmaxSet,
    CorrectionSource,
    HolderEstimate,
    RateBound,
    ResidualField,
    compute_rate_bound,
    compute_residual_field,
    corrected_value,
    correction_source,
    estimate_holder_constant,
    estimate_surface_holder,
    extract_argmax_set,
    extract_limit_policy,
    hamiltonian_feedback,
    second_difference,
    solve_correction_pde,
    solve_diffusion_hjb,
    stable_time_step,
    taylor_residual,
    third_difference,
)
from .errors import (
    ConfigurationError,
    JumpLimitError,
    NumericalError,
    ResourceError,
    StabilityError,
)
from .jump import (
    JumpKernel,
    apply_jump_step,
    build_jump_kernel,
    evaluate_fixed_policy_on_chain,
    solve_jump_hjb,
)
from .meshes import (
    DEFAULT_NODE_CAP,
    JUMP_STEP_RATIO,
    DiffusionMeshes,
    SpaceMesh,
    TimeMesh,
    default_diffusion_meshes,
    default_jump_meshes,
)
from .model import (
    AuctionParams,
    ControlGrid,
    Domain,
    ModelSpec,
    NoiseQuadrature,
    ValidationReport,
    aggregate_drift,
    aggregate_third_moment,
    aggregate_volatility,
    auction_reward,
    make_auction_model,
    make_bump_model,
    make_coefficient,
    make_control_grid,
    make_reward,
    make_two_point_quadrature,
    make_uniform_quadrature,
    validate_model,
)
from .simulate import MCEstimate, Trajectory, evaluate_policy_mc, simulate_path
from .studies import (
    BenchRow,
    ConvergenceReport,
    CostReport,
    EpsilonRow,
    fit_loglog_slope,
    run_convergence_study,
    run_cost_benchmark,
    warm_up_solvers,
)
from .surfaces import PolicySurface, ValueSurface, as_control_fn

__version__ = "0.1.0"
