"""Anchored extragradient solvers for smooth saddle-point problems.

The package bundles the varying-step anchored extragradient method and the
fast extragradient method for comonotone operators, each with fixed, moving
(positive, naive negative, capped negative) and proximal anchor variants,
together with Lyapunov diagnostics, closed-form bound checkers, and a CSV
benchmark harness.
"""

from .algorithms import (
    ProximalSpec,
    RunConfig,
    SolverState,
    StepOutput,
    eagv_step,
    feg_step,
    init_state,
    projected_step,
    proximal_anchor_update,
    run,
)
from .diagnostics import (
    BoundConstants,
    ExactConvergence,
    HypothesisWarning,
    MonotoneReport,
    RateReport,
    Trajectory,
    TrajectoryRecord,
    check_lyapunov_monotone,
    lyapunov_eagv,
    lyapunov_feg,
    rate_slope,
    theoretical_bound,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    ExperimentResult,
    parse_config,
    preset,
    preset_names,
    read_trajectory_csv,
    run_experiment,
    write_trajectory_csv,
)
from .problems import (
    ComonotonicityReport,
    GameInstance,
    JointPoint,
    SaddleProblem,
    check_comonotonicity,
    estimate_lipschitz,
    eval_operator,
    finite_difference_operator,
    make_almost_bilinear,
    make_comonotone_quadratic,
    make_nonlinear_game,
    project_simplex,
    read_matrix,
    write_matrix,
)
from .schedules import (
    PI2_OVER_6,
    AnchorSchedule,
    EagvSchedule,
    FegSchedule,
    alpha_limit,
    anchor_schedule_next,
    c_limit,
    delta_default,
    e_default,
    eagv_alpha_next,
    eagv_schedule_at,
    feg_schedule_at,
    negative_gamma_cap,
)

__version__ = "0.1.0"
